#pragma once

#include <map>
#include <string>
#include <vector>

#include "modnet/model.hpp"

namespace modnet {

/// -log(max(dist[target], 1e-12)); the batch loss is the mean over the
/// batch's per-instance losses.
Tensor cross_entropy(Tape& tape, const Tensor& dist, std::size_t target);

struct AdadeltaConfig {
    double rho = 0.95;
    double epsilon = 1e-6;
};

/// E[g2] <- rho E[g2] + (1-rho) g2
/// dx    <- -(sqrt(E[dx2]+eps) / sqrt(E[g2]+eps)) g
/// E[dx2] <- rho E[dx2] + (1-rho) dx2
class Adadelta {
public:
    explicit Adadelta(AdadeltaConfig cfg = {}) : cfg_(cfg) {}

    /// Applies one update to every parameter from its accumulated .grad
    /// (missing gradients count as zero). A non-finite gradient rejects the
    /// whole step before anything mutates.
    void step(ParameterStore& params);

    struct Slot {
        std::vector<double> accum_grad_sq;
        std::vector<double> accum_update_sq;
    };
    const Slot* slot(const std::string& name) const;

private:
    AdadeltaConfig cfg_;
    std::map<std::string, Slot> slots_;
};

/// Stop when validation accuracy fails to improve for `patience` consecutive
/// epochs; the best epoch's model is the one kept.
struct EarlyStopping {
    std::size_t patience = 1;
    double best = -1.0;
    std::size_t stale = 0;

    /// Feeds one epoch's validation accuracy; true iff it improved the best.
    bool observe(double val_acc) {
        if (val_acc > best) {
            best = val_acc;
            stale = 0;
            return true;
        }
        ++stale;
        return false;
    }
    bool should_stop() const { return stale >= patience; }
};

enum class Metric { kExact, kConsensus };
Metric metric_from_string(const std::string& name);

enum class QuestionCategory { kYesNo, kNumber, kOther };

/// yes/no if the question starts with an auxiliary, number if it starts
/// with "how many", other otherwise.
QuestionCategory categorize_question(const std::vector<std::string>& tokens);

/// min(matches/3, 1) credit against the instance's human answers.
double consensus_credit(std::size_t matching_humans);

struct EvalResult {
    double overall = 0.0;
    double yes_no = 0.0;
    double number = 0.0;
    double other = 0.0;
    std::size_t n = 0;
    std::size_t n_yes_no = 0;
    std::size_t n_number = 0;
    std::size_t n_other = 0;
};

EvalResult evaluate(const Model& model, const std::vector<Instance>& instances, Metric metric);

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double seconds = 0.0;
};

struct TrainOutcome {
    std::vector<EpochMetrics> log;
    std::size_t best_epoch = 0;
    double best_val_acc = 0.0;
};

/// Seeded shuffled mini-batches, ADADELTA updates, early stopping on
/// validation accuracy; on return the model holds the best-validation
/// weights. Instances must be prepared and the model initialized.
TrainOutcome train_loop(Model& model, std::vector<Instance>& train,
                        const std::vector<Instance>& val);

/// Convenience wrapper: builds the model, prepares both splits, trains.
Model train_model(RunConfig cfg, std::vector<Instance>& train, std::vector<Instance>& val,
                  const EmbeddingTable* pretrained, const KbIndex* index,
                  TrainOutcome* outcome = nullptr);

/// Checkpoint: magic "MODNET01", JSON header (format version, dims, vocab,
/// config, tensor manifest), float32 little-endian payload in manifest
/// order. save -> load -> save is byte-identical.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

/// metrics.log: one JSON object per epoch.
void write_metrics_log(const std::string& path, const std::vector<EpochMetrics>& log);

}  // namespace modnet
