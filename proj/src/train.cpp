#include "modnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "modnet/binio.hpp"

namespace modnet {

using nlohmann::json;

Tensor cross_entropy(Tape& tape, const Tensor& dist, std::size_t target) {
    if (target >= dist.size()) {
        throw DimensionError("cross_entropy: target " + std::to_string(target) +
                             " out of range for " + std::to_string(dist.size()) + " classes");
    }
    return tape.scale(tape.log_clamped(tape.pick(dist, target), 1e-12), -1.0);
}

void Adadelta::step(ParameterStore& params) {
    // Validate every gradient first so a bad batch never half-applies.
    for (const auto& [name, t] : params) {
        for (double g : t.grad()) {
            if (!std::isfinite(g)) {
                throw Error("adadelta: non-finite gradient in " + name);
            }
        }
    }
    for (const auto& [name, t] : params) {
        Slot& slot = slots_[name];
        if (slot.accum_grad_sq.size() != t.size()) {
            slot.accum_grad_sq.assign(t.size(), 0.0);
            slot.accum_update_sq.assign(t.size(), 0.0);
        }
        Tensor mut = t;
        const std::vector<double>& grad = t.grad();
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double g = grad.empty() ? 0.0 : grad[i];
            slot.accum_grad_sq[i] = cfg_.rho * slot.accum_grad_sq[i] + (1.0 - cfg_.rho) * g * g;
            const double dx = -(std::sqrt(slot.accum_update_sq[i] + cfg_.epsilon) /
                                std::sqrt(slot.accum_grad_sq[i] + cfg_.epsilon)) *
                              g;
            slot.accum_update_sq[i] =
                cfg_.rho * slot.accum_update_sq[i] + (1.0 - cfg_.rho) * dx * dx;
            mut[i] += dx;
        }
    }
}

const Adadelta::Slot* Adadelta::slot(const std::string& name) const {
    const auto it = slots_.find(name);
    return it == slots_.end() ? nullptr : &it->second;
}

Metric metric_from_string(const std::string& name) {
    if (name == "exact") return Metric::kExact;
    if (name == "consensus") return Metric::kConsensus;
    throw Error("unknown metric: " + name + " (expected exact or consensus)");
}

QuestionCategory categorize_question(const std::vector<std::string>& tokens) {
    if (tokens.empty()) return QuestionCategory::kOther;
    if (is_auxiliary(tokens.front())) return QuestionCategory::kYesNo;
    if (tokens.size() >= 2 && tokens[0] == "how" && tokens[1] == "many") {
        return QuestionCategory::kNumber;
    }
    return QuestionCategory::kOther;
}

double consensus_credit(std::size_t matching_humans) {
    return std::min(static_cast<double>(matching_humans) / 3.0, 1.0);
}

EvalResult evaluate(const Model& model, const std::vector<Instance>& instances, Metric metric) {
    EvalResult result;
    double sum = 0.0, sum_yes_no = 0.0, sum_number = 0.0, sum_other = 0.0;
    for (const Instance& inst : instances) {
        Tape tape;
        const Tensor dist = model.forward(tape, inst);
        const std::string predicted = predict_answer(dist, model.vocab);

        double credit;
        if (metric == Metric::kExact) {
            credit = predicted == inst.top_answer ? 1.0 : 0.0;
        } else {
            const std::size_t matches = static_cast<std::size_t>(
                std::count(inst.answers.begin(), inst.answers.end(), predicted));
            credit = consensus_credit(matches);
        }

        sum += credit;
        ++result.n;
        switch (categorize_question(inst.question)) {
            case QuestionCategory::kYesNo:
                sum_yes_no += credit;
                ++result.n_yes_no;
                break;
            case QuestionCategory::kNumber:
                sum_number += credit;
                ++result.n_number;
                break;
            case QuestionCategory::kOther:
                sum_other += credit;
                ++result.n_other;
                break;
        }
    }
    result.overall = result.n ? sum / static_cast<double>(result.n) : 0.0;
    result.yes_no = result.n_yes_no ? sum_yes_no / static_cast<double>(result.n_yes_no) : 0.0;
    result.number = result.n_number ? sum_number / static_cast<double>(result.n_number) : 0.0;
    result.other = result.n_other ? sum_other / static_cast<double>(result.n_other) : 0.0;
    return result;
}

namespace {

std::map<std::string, std::vector<double>> snapshot_values(const ParameterStore& params) {
    std::map<std::string, std::vector<double>> snap;
    for (const auto& [name, t] : params) snap.emplace(name, t.values());
    return snap;
}

void restore_values(ParameterStore& params, const std::map<std::string, std::vector<double>>& snap) {
    for (const auto& [name, values] : snap) {
        Tensor t = params.get(name);
        t.values() = values;
    }
}

}  // namespace

TrainOutcome train_loop(Model& model, std::vector<Instance>& train,
                        const std::vector<Instance>& val) {
    if (train.empty() || val.empty()) throw Error("train and validation sets must be nonempty");

    Adadelta optimizer;
    EarlyStopping stopping{model.cfg.patience};
    TrainOutcome outcome;
    std::map<std::string, std::vector<double>> best_snapshot = snapshot_values(model.params);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch_size = std::max<std::size_t>(1, model.cfg.batch);

    for (std::size_t epoch = 1; epoch <= model.cfg.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), model.params.rng());

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t at = 0; at < order.size(); at += batch_size) {
            const std::size_t end = std::min(order.size(), at + batch_size);
            model.params.zero_grads();
            Tape tape;
            std::vector<Tensor> losses;
            losses.reserve(end - at);
            for (std::size_t i = at; i < end; ++i) {
                const Instance& inst = train[order[i]];
                Tensor dist = model.forward(tape, inst);
                losses.push_back(cross_entropy(tape, dist, inst.target));
                if (model.vocab.token(argmax_index(dist)) == inst.top_answer) ++correct;
            }
            Tensor batch_loss =
                tape.scale(tape.sum(tape.concat(losses)),
                           1.0 / static_cast<double>(losses.size()));
            tape.backward(batch_loss);
            optimizer.step(model.params);
            loss_sum += batch_loss[0] * static_cast<double>(losses.size());
        }

        const double val_acc = evaluate(model, val, Metric::kExact).overall;
        const bool improved = stopping.observe(val_acc);
        if (improved) {
            best_snapshot = snapshot_values(model.params);
            outcome.best_epoch = epoch;
            outcome.best_val_acc = val_acc;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(train.size());
        m.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
        m.val_acc = val_acc;
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        outcome.log.push_back(m);

        if (stopping.should_stop()) break;
    }

    restore_values(model.params, best_snapshot);
    return outcome;
}

Model train_model(RunConfig cfg, std::vector<Instance>& train, std::vector<Instance>& val,
                  const EmbeddingTable* pretrained, const KbIndex* index, TrainOutcome* outcome) {
    Model model(std::move(cfg));
    model.init_for_training(train, pretrained, index);
    std::vector<Instance> prepared_val = val;
    model.prepare_instances(prepared_val, index);
    TrainOutcome result = train_loop(model, train, prepared_val);
    if (outcome != nullptr) *outcome = std::move(result);
    return model;
}

namespace {

constexpr char kCheckpointMagic[] = "MODNET01";

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    json manifest = json::array();
    std::vector<std::uint8_t> payload;
    for (const auto& [name, t] : model.params) {
        json entry;
        entry["name"] = name;
        entry["shape"] = t.shape();
        manifest.push_back(std::move(entry));
        for (double v : t.values()) binio::put_f32(payload, static_cast<float>(v));
    }

    json header;
    header["format_version"] = 1;
    header["dims"] = {{"d", model.cfg.channels}, {"h", model.cfg.height}, {"w", model.cfg.width}};
    header["vocab"] = model.vocab.answers();
    header["config"] = json::parse(model.cfg.to_json_text());
    header["manifest"] = std::move(manifest);
    const std::string header_text = header.dump();

    std::vector<std::uint8_t> bytes;
    bytes.insert(bytes.end(), kCheckpointMagic, kCheckpointMagic + 8);
    binio::put_u64(bytes, header_text.size());
    bytes.insert(bytes.end(), header_text.begin(), header_text.end());
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    binio::write_file(path, bytes);
}

Model load_checkpoint(const std::string& path) {
    const std::vector<std::uint8_t> bytes = binio::read_file(path);
    binio::Reader r{bytes.data(), bytes.size(), 0, "checkpoint " + path};
    if (r.bytes(8) != kCheckpointMagic) {
        throw FormatError("checkpoint " + path + ": bad magic");
    }
    const std::uint64_t header_len = r.u64();
    json header;
    try {
        header = json::parse(r.bytes(header_len));
    } catch (const json::exception& e) {
        throw FormatError("checkpoint " + path + ": bad header: " + e.what());
    }
    if (header.at("format_version").get<int>() != 1) {
        throw FormatError("checkpoint " + path + ": unsupported format version");
    }

    Model model(RunConfig::from_json_text(header.at("config").dump()));
    model.vocab = AnswerVocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    if (model.cfg.channels != header.at("dims").at("d").get<std::size_t>() ||
        model.cfg.height != header.at("dims").at("h").get<std::size_t>() ||
        model.cfg.width != header.at("dims").at("w").get<std::size_t>()) {
        throw FormatError("checkpoint " + path + ": dims disagree with config");
    }

    std::size_t expected_payload = 0;
    for (const json& entry : header.at("manifest")) {
        Shape shape = entry.at("shape").get<Shape>();
        expected_payload += shape_numel(shape) * 4;
    }
    if (r.at + expected_payload != bytes.size()) {
        throw FormatError("checkpoint " + path + ": payload length " +
                          std::to_string(bytes.size() - r.at) + " does not match manifest " +
                          std::to_string(expected_payload));
    }

    model.embeddings = EmbeddingTable(model.cfg.d_emb);
    const std::string pad_name = std::string("embed/") + kPadToken;
    for (const json& entry : header.at("manifest")) {
        const std::string name = entry.at("name").get<std::string>();
        const Shape shape = entry.at("shape").get<Shape>();
        std::vector<double> values(shape_numel(shape));
        for (double& v : values) v = static_cast<double>(r.f32());
        Tensor t = Tensor::from(shape, std::move(values));
        t.set_requires_grad(name != pad_name);
        model.params.put(name, t);
        if (name.rfind("embed/", 0) == 0) {
            model.embeddings.insert(name.substr(6), t);
        }
    }
    model.params.freeze();
    return model;
}

void write_metrics_log(const std::string& path, const std::vector<EpochMetrics>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write metrics log: " + path);
    for (const EpochMetrics& m : log) {
        json j;
        j["epoch"] = m.epoch;
        j["train_loss"] = m.train_loss;
        j["train_acc"] = m.train_acc;
        j["val_acc"] = m.val_acc;
        j["seconds"] = m.seconds;
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing metrics log: " + path);
}

}  // namespace modnet
