// Copyright 2026 The samdistill Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "samdistill/core/blob_file.hpp"
#include "samdistill/core/metrics.hpp"
#include "samdistill/data/dataset.hpp"
#include "samdistill/distill/losses.hpp"
#include "samdistill/train/adam.hpp"
#include "samdistill/train/config.hpp"

namespace samdistill::train {

inline constexpr char kCheckpointMagic[] = "SDCK1000";

// One row of the JSONL training log. Validation metrics are only present on
// eval steps (has_val), so every serialized field is always finite.
struct TrainLogRecord {
  int64_t step = 0;
  double l_recon1 = 0.0;
  double l_recon2 = 0.0;
  double l_spd = 0.0;
  double l_sgr = 0.0;
  double total = 0.0;
  double val_psnr1 = 0.0;
  double val_psnr2 = 0.0;
  bool has_val = false;
  int64_t sgr_skips = 0;
};

void to_json(nlohmann::json& j, const TrainLogRecord& r);

// Shuffled-epoch index stream. Reshuffles in place when an epoch ends, so
// (permutation, position, engine state) fully determine the future.
class EpochSampler {
 public:
  EpochSampler() = default;
  EpochSampler(int64_t n, uint64_t seed) : rng_(seed), perm_(n) {
    std::iota(perm_.begin(), perm_.end(), int64_t(0));
    rng_.shuffle(perm_);
  }

  int64_t next() {
    if (pos_ >= perm_.size()) {
      rng_.shuffle(perm_);
      pos_ = 0;
    }
    return perm_[pos_++];
  }

  std::string rng_state() const { return rng_.serialize(); }
  const std::vector<int64_t>& perm() const { return perm_; }
  int64_t pos() const { return static_cast<int64_t>(pos_); }

  void restore(std::vector<int64_t> perm, int64_t pos,
               const std::string& rng_state) {
    perm_ = std::move(perm);
    pos_ = static_cast<size_t>(pos);
    rng_.deserialize(rng_state);
  }

 private:
  core::Rng rng_{0};
  std::vector<int64_t> perm_;
  size_t pos_ = 0;
};

// Joint training of the restoration network and its mask-conditioned
// refiner. Per step: restore, segment the restored image, refine with the
// masks, then update the restorer with recon + weighted distillation
// gradients and the refiner with its own reconstruction gradient only (the
// distillation terms treat the refined image as a detached target).
//
// Component RNG streams derive from (seed, component tag), so the restorer
// initializes identically whether or not a refiner exists; with
// lambda1 = lambda2 = 0 its parameter trajectory is bit-identical to a
// student_only run.
template <class S>
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const std::vector<data::PairedSample>& train,
          const std::vector<data::PairedSample>& val)
      : cfg_(checked(cfg)),
        student_(cfg.student, core::Rng::derive(cfg.seed, "ir1")),
        student_opt_(cfg.adam, student_.params()),
        sampler_(static_cast<int64_t>(train.size()),
                 core::Rng::derive(cfg.seed, "batches")) {
    if (train.empty()) throw TrainingError("training set is empty");
    for (const auto& s : train) {
      train_.push_back({s.id, s.lq.template cast<S>(), s.hq.template cast<S>()});
    }
    for (const auto& s : val) {
      val_.push_back({s.id, s.lq.template cast<S>(), s.hq});
    }
    if (!cfg_.student_only) {
      refiner_.emplace(cfg_.refiner, core::Rng::derive(cfg_.seed, "refiner"));
      perceptual_.emplace(cfg_.perceptual,
                          core::Rng::derive(cfg_.seed, "perceptual"));
      refiner_opt_.emplace(cfg_.adam, refiner_->params());
    }
  }

  // One optimization step over a fresh batch. A single backward pass serves
  // both parameter groups; the graph wiring guarantees the isolation
  // contracts (see spd_sgr_losses and detach_cascade_input).
  TrainLogRecord step() {
    TrainLogRecord rec;
    rec.step = ++step_;
    const int64_t bs = cfg_.batch_size;
    const S inv_b = S(1) / static_cast<S>(bs);

    core::VarT<S> student_sum, refiner_sum, distill_sum;
    bool have_refiner = false, have_distill = false;
    double rec1_acc = 0.0, rec2_acc = 0.0, spd_acc = 0.0, sgr_acc = 0.0;

    for (int64_t b = 0; b < bs; ++b) {
      const TrainSample& s = train_[static_cast<size_t>(sampler_.next())];
      core::VarT<S> lq = core::VarT<S>::constant(s.lq);
      core::VarT<S> hq = core::VarT<S>::constant(s.hq);
      core::VarT<S> y1 = student_.forward(lq);
      core::VarT<S> rec1 = core::l1_loss(y1, hq);
      rec1_acc += static_cast<double>(rec1.item());
      core::VarT<S> contrib = rec1;

      if (refiner_) {
        core::MaskSet m = segment_restored(y1.value(), s.id);
        core::VarT<S> y1_in = cfg_.detach_cascade_input ? y1.detach() : y1;
        core::VarT<S> packed = core::VarT<S>::constant(models::pack_masks<S>(
            m, cfg_.refiner.mask_slots, s.lq.dim(1), s.lq.dim(2)));
        core::VarT<S> y2 = refiner_->forward(y1_in, packed);
        core::VarT<S> rec2 = core::l1_loss(y2, hq);
        rec2_acc += static_cast<double>(rec2.item());
        refiner_sum = have_refiner ? core::add(refiner_sum, rec2) : rec2;
        have_refiner = true;

        bool want_spd = cfg_.lambda1 != 0.0;
        bool want_sgr = cfg_.lambda2 != 0.0;
        if (want_spd || want_sgr) {
          distill::DistillLossResult<S> d = distill::spd_sgr_losses<S>(
              y1, y2, m, *perceptual_, want_spd, want_sgr);
          if (d.sgr_skipped) rec.sgr_skips++;
          core::VarT<S> term;
          bool have_term = false;
          if (want_spd) {
            term = core::mul_scalar(d.spd, static_cast<S>(cfg_.lambda1));
            have_term = true;
            spd_acc += static_cast<double>(d.spd.item());
          }
          if (want_sgr && !d.sgr_skipped) {
            core::VarT<S> t =
                core::mul_scalar(d.sgr, static_cast<S>(cfg_.lambda2));
            term = have_term ? core::add(term, t) : t;
            have_term = true;
            sgr_acc += static_cast<double>(d.sgr.item());
          }
          if (have_term) {
            contrib = core::add(contrib, term);
            if (audit_) {
              distill_sum = have_distill ? core::add(distill_sum, term) : term;
              have_distill = true;
            }
          }
        }
      }
      student_sum = b == 0 ? contrib : core::add(student_sum, contrib);
    }

    core::VarT<S> student_total = core::mul_scalar(student_sum, inv_b);
    rec.l_recon1 = rec1_acc / static_cast<double>(bs);
    rec.l_spd = spd_acc / static_cast<double>(bs);
    rec.l_sgr = sgr_acc / static_cast<double>(bs);
    rec.total = static_cast<double>(student_total.item());

    core::VarT<S> grand = student_total;
    if (have_refiner) {
      core::VarT<S> refiner_total = core::mul_scalar(refiner_sum, inv_b);
      rec.l_recon2 = static_cast<double>(refiner_total.item());
      rec.total += rec.l_recon2;
      grand = core::add(student_total, refiner_total);
    }
    if (!std::isfinite(rec.total)) {
      throw TrainingError(
          "non-finite loss at step " + std::to_string(step_) + ": recon1=" +
          std::to_string(rec.l_recon1) + " recon2=" +
          std::to_string(rec.l_recon2) + " spd=" + std::to_string(rec.l_spd) +
          " sgr=" + std::to_string(rec.l_sgr));
    }

    // Separate audit pass: the weighted distillation terms alone must not
    // produce gradients for any refiner or perceptual parameter.
    if (audit_ && have_distill) {
      core::GradMapT<S> dg =
          core::backward(core::mul_scalar(distill_sum, inv_b));
      for (const auto& [name, var] : refiner_->params()) {
        if (dg.find(var)) audit_clean_ = false;
      }
      for (const auto& [name, var] : perceptual_->params()) {
        if (dg.find(var)) audit_clean_ = false;
      }
    }

    core::GradMapT<S> grads = core::backward(grand);
    student_opt_.step(grads);
    if (refiner_opt_) refiner_opt_->step(grads);
    return rec;
  }

  // Full schedule. With out_dir set, writes the effective config, a JSONL
  // log, periodic checkpoints, and a final checkpoint.
  void run() {
    std::ofstream log;
    if (!cfg_.out_dir.empty()) {
      std::filesystem::create_directories(cfg_.out_dir);
      std::ofstream cfg_echo(cfg_.out_dir + "/effective_config.json");
      cfg_echo << nlohmann::json(cfg_).dump(2) << "\n";
      log.open(cfg_.out_dir + "/train_log.jsonl", std::ios::app);
    }
    while (step_ < cfg_.steps) {
      TrainLogRecord rec = step();
      bool last = rec.step == cfg_.steps;
      bool do_log = rec.step % cfg_.log_every == 0 || last;
      if (cfg_.eval_every > 0 && !val_.empty() &&
          (rec.step % cfg_.eval_every == 0 || last)) {
        if (refiner_) {
          auto [p1, p2] = eval_cascade_psnr();
          rec.val_psnr1 = p1;
          rec.val_psnr2 = p2;
        } else {
          rec.val_psnr1 = eval_student_psnr();
        }
        rec.has_val = true;
        do_log = true;
      }
      if (do_log && log.is_open()) {
        log << nlohmann::json(rec).dump() << "\n" << std::flush;
      }
      if (cfg_.checkpoint_every > 0 && rec.step % cfg_.checkpoint_every == 0 &&
          !cfg_.out_dir.empty() && !last) {
        save_checkpoint(cfg_.out_dir + "/ckpt_" + std::to_string(rec.step) +
                        ".bin");
      }
    }
    if (!cfg_.out_dir.empty()) {
      save_checkpoint(cfg_.out_dir + "/ckpt_final.bin");
    }
  }

  // Mean restoration PSNR over the validation split, restorer path only.
  double eval_student_psnr() {
    if (val_.empty()) throw ConfigError("validation set is empty");
    core::NoGradGuard ng;
    double acc = 0.0;
    for (const ValSample& s : val_) {
      core::Tensor y = core::clamp01(
          student_.forward(core::VarT<S>::constant(s.lq))
              .value()
              .template cast<double>());
      acc += core::psnr(y, s.hq);
    }
    return acc / static_cast<double>(val_.size());
  }

  // Mean PSNR of (restored, refined) over the validation split.
  std::pair<double, double> eval_cascade_psnr() {
    if (val_.empty()) throw ConfigError("validation set is empty");
    if (!refiner_) throw ConfigError("cascade evaluation needs a refiner");
    core::NoGradGuard ng;
    double acc1 = 0.0, acc2 = 0.0;
    for (const ValSample& s : val_) {
      core::VarT<S> y1 = student_.forward(core::VarT<S>::constant(s.lq));
      core::MaskSet m = segment_restored(y1.value(), s.id);
      core::VarT<S> packed = core::VarT<S>::constant(models::pack_masks<S>(
          m, cfg_.refiner.mask_slots, s.lq.dim(1), s.lq.dim(2)));
      core::VarT<S> y2 = refiner_->forward(y1, packed);
      acc1 += core::psnr(
          core::clamp01(y1.value().template cast<double>()), s.hq);
      acc2 += core::psnr(
          core::clamp01(y2.value().template cast<double>()), s.hq);
    }
    double n = static_cast<double>(val_.size());
    return {acc1 / n, acc2 / n};
  }

  void save_checkpoint(const std::string& path) const {
    core::BlobFile f;
    f.header["format"] = "checkpoint";
    f.header["version"] = 1;
    f.header["step"] = step_;
    f.header["config"] = cfg_;
    f.header["sampler"] = {{"rng", sampler_.rng_state()},
                           {"perm", sampler_.perm()},
                           {"pos", sampler_.pos()}};
    f.header["student"] = dump_group(student_opt_, &f);
    if (refiner_opt_) f.header["refiner"] = dump_group(*refiner_opt_, &f);
    core::write_blob_file(path, kCheckpointMagic, f);
  }

  // Restores parameters, optimizer state, sampler, and step counter from a
  // checkpoint written by a trainer with the same architecture. Resuming
  // reproduces the uninterrupted run bit for bit.
  void restore(const std::string& path) {
    core::BlobFile f = core::read_blob_file(path, kCheckpointMagic);
    if (f.header.value("format", "") != "checkpoint") {
      throw IoError("'" + path + "' is not a checkpoint file");
    }
    step_ = f.header.at("step").get<int64_t>();
    size_t blob = 0;
    load_group(f, f.header.at("student"), &blob, &student_opt_);
    if (refiner_opt_) {
      if (!f.header.contains("refiner")) {
        throw IoError("checkpoint has no refiner but this config needs one");
      }
      load_group(f, f.header.at("refiner"), &blob, &*refiner_opt_);
    }
    const nlohmann::json& smp = f.header.at("sampler");
    sampler_.restore(smp.at("perm").get<std::vector<int64_t>>(),
                     smp.at("pos").get<int64_t>(),
                     smp.at("rng").get<std::string>());
  }

  int64_t current_step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  models::BaselineModel<S>& student() { return student_; }
  const models::Refiner<S>* refiner() const {
    return refiner_ ? &*refiner_ : nullptr;
  }
  const distill::PerceptualExtractor<S>* perceptual() const {
    return perceptual_ ? &*perceptual_ : nullptr;
  }

  // Enables the per-step isolation audit; audit_clean() reports whether any
  // audited step leaked distillation gradients into frozen components.
  void set_audit(bool on) { audit_ = on; }
  bool audit_clean() const { return audit_clean_; }

 private:
  struct TrainSample {
    std::string id;
    core::TensorT<S> lq, hq;
  };
  struct ValSample {
    std::string id;
    core::TensorT<S> lq;
    core::Tensor hq;
  };

  static const TrainConfig& checked(const TrainConfig& cfg) {
    cfg.validate();
    return cfg;
  }

  // The id keys mask lookup for the precomputed segmenter; other kinds
  // ignore it.
  core::MaskSet segment_restored(const core::TensorT<S>& restored,
                                 const std::string& id) const {
    core::Tensor img = core::clamp01(restored.template cast<double>());
    return segmenter::canonicalize(segmenter::segment(img, cfg_.segmenter, id),
                                   cfg_.segmenter.n_max);
  }

  nlohmann::json dump_group(const Adam<S>& opt, core::BlobFile* f) const {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& [name, var] : opt.params()) {
      names.push_back(name);
      f->blobs.push_back(var.value().template cast<double>());
    }
    for (const auto& m : opt.moments1()) {
      f->blobs.push_back(m.template cast<double>());
    }
    for (const auto& v : opt.moments2()) {
      f->blobs.push_back(v.template cast<double>());
    }
    return {{"params", names}, {"adam_t", opt.t()}};
  }

  void load_group(const core::BlobFile& f, const nlohmann::json& meta,
                  size_t* blob, Adam<S>* opt) {
    const auto names = meta.at("params").get<std::vector<std::string>>();
    const auto& bound = opt->params();
    if (names.size() != bound.size()) {
      throw IoError("checkpoint parameter group size mismatch");
    }
    auto take = [&](const core::Shape& shape) -> core::TensorT<S> {
      if (*blob >= f.blobs.size()) throw IoError("checkpoint is truncated");
      const core::Tensor& t = f.blobs[(*blob)++];
      if (t.shape() != shape) {
        throw IoError("checkpoint tensor shape mismatch");
      }
      return t.template cast<S>();
    };
    for (size_t i = 0; i < bound.size(); ++i) {
      if (names[i] != bound[i].first) {
        throw IoError("checkpoint parameter '" + names[i] +
                      "' does not match model parameter '" + bound[i].first +
                      "'");
      }
      // Handles share their node: assigning through a copy updates the model.
      core::VarT<S> var = bound[i].second;
      var.mutable_value() = take(var.value().shape());
    }
    for (size_t i = 0; i < bound.size(); ++i) {
      opt->moments1()[i] = take(bound[i].second.value().shape());
    }
    for (size_t i = 0; i < bound.size(); ++i) {
      opt->moments2()[i] = take(bound[i].second.value().shape());
    }
    opt->set_t(meta.at("adam_t").get<int64_t>());
  }

  TrainConfig cfg_;
  std::vector<TrainSample> train_;
  std::vector<ValSample> val_;
  models::BaselineModel<S> student_;
  std::optional<models::Refiner<S>> refiner_;
  std::optional<distill::PerceptualExtractor<S>> perceptual_;
  Adam<S> student_opt_;
  std::optional<Adam<S>> refiner_opt_;
  EpochSampler sampler_;
  int64_t step_ = 0;
  bool audit_ = false;
  bool audit_clean_ = true;
};

struct EvalReport {
  std::string which;
  int64_t count = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

// Loads a checkpoint and scores it on a manifest split. which = "student"
// runs only the restoration network: no segmenter, refiner, or perceptual
// extractor is constructed (the instrumentation counters stay at zero).
// which = "teacher" scores the full cascade.
EvalReport evaluate(const std::string& checkpoint_path,
                    const std::string& manifest_path, const std::string& which);

// Loads manifests, trains to cfg.steps (resuming first when resume_path is
// nonempty), and leaves artifacts in cfg.out_dir.
void run_training(const TrainConfig& cfg, const std::string& resume_path = "");

}  // namespace samdistill::train
