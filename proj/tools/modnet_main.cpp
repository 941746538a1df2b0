// Command-line entry point: training, evaluation, prediction, layout
// compilation, kb indexing/query and synthetic data generation.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "modnet/data.hpp"
#include "modnet/knowledge.hpp"
#include "modnet/layout.hpp"
#include "modnet/model.hpp"
#include "modnet/train.hpp"

namespace {

using namespace modnet;

// Exit codes: 0 ok, 1 internal error, 2 usage, 3 missing/unreadable file,
// 4 malformed input, 5 dimension/config mismatch.
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;
constexpr int kExitDimension = 5;

TopPolicy policy_from_flag(const std::string& measure_for) {
    TopPolicy policy;
    if (measure_for == "none") return policy;
    if (measure_for == "count") {
        policy.measure_for_count = true;
    } else if (measure_for == "yesno") {
        policy.measure_for_yesno = true;
    } else if (measure_for == "both") {
        policy.measure_for_count = true;
        policy.measure_for_yesno = true;
    } else {
        throw Error("unknown --measure-for value: " + measure_for);
    }
    return policy;
}

ParseMode parse_mode_from_flag(const std::string& mode) {
    if (mode == "short") return ParseMode::kShort;
    if (mode == "longest") return ParseMode::kLongest;
    throw Error("unknown --parse-mode value: " + mode);
}

struct TrainArgs {
    std::string model = "nmn";
    std::string data, val, embeddings, abstracts, index, out;
    std::string metrics_out;
    std::size_t batch = 32, epochs = 12, patience = 1, answers_k = 64;
    std::size_t q_hidden = 128, c_hidden = 64, attn_k = 200, kb_topk = 3;
    std::string parse_mode = "short", measure_for = "none";
    std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& args) {
    RunConfig cfg;
    cfg.variant = variant_from_string(args.model);
    cfg.answers_k = args.answers_k;
    cfg.q_hidden = args.q_hidden;
    cfg.c_hidden = args.c_hidden;
    cfg.attn_k = args.attn_k;
    cfg.kb_topk = args.kb_topk;
    cfg.batch = args.batch;
    cfg.max_epochs = args.epochs;
    cfg.patience = args.patience;
    cfg.parse_mode = parse_mode_from_flag(args.parse_mode);
    cfg.top_policy = policy_from_flag(args.measure_for);
    cfg.seed = args.seed;
    cfg.data_path = args.data;
    cfg.val_path = args.val;
    cfg.embeddings_path = args.embeddings;
    cfg.index_path = args.index;

    std::vector<Instance> train = load_instances_jsonl(args.data);
    std::vector<Instance> val =
        args.val.empty() ? train : load_instances_jsonl(args.val);

    std::optional<EmbeddingTable> pretrained;
    if (!args.embeddings.empty()) pretrained = EmbeddingTable::from_text_file(args.embeddings);
    std::optional<KbIndex> index;
    if (!args.index.empty()) index = KbIndex::load(args.index);

    TrainOutcome outcome;
    Model model = train_model(std::move(cfg), train, val,
                              pretrained ? &*pretrained : nullptr,
                              index ? &*index : nullptr, &outcome);
    save_checkpoint(model, args.out);

    const std::string metrics_path =
        args.metrics_out.empty() ? args.out + ".metrics.log" : args.metrics_out;
    write_metrics_log(metrics_path, outcome.log);

    std::cout << "trained " << to_string(model.cfg.variant) << ": best epoch "
              << outcome.best_epoch << ", val acc " << outcome.best_val_acc << "\n"
              << "checkpoint: " << args.out << "\nmetrics: " << metrics_path << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& index_path,
             const std::string& metric_name) {
    Model model = load_checkpoint(ckpt);
    std::vector<Instance> instances = load_instances_jsonl(data);
    std::optional<KbIndex> index;
    if (!index_path.empty()) index = KbIndex::load(index_path);
    model.prepare_instances(instances, index ? &*index : nullptr);

    const EvalResult r = evaluate(model, instances, metric_from_string(metric_name));
    std::cout << "overall " << r.overall << " (" << r.n << " instances)\n"
              << "yes/no " << r.yes_no << " (" << r.n_yes_no << ")\n"
              << "number " << r.number << " (" << r.n_number << ")\n"
              << "other " << r.other << " (" << r.n_other << ")\n";
    return 0;
}

int cmd_predict(const std::string& ckpt, const std::string& data, const std::string& index_path,
                const std::string& out_path) {
    Model model = load_checkpoint(ckpt);
    std::vector<Instance> instances = load_instances_jsonl(data);
    std::optional<KbIndex> index;
    if (!index_path.empty()) index = KbIndex::load(index_path);
    model.prepare_instances(instances, index ? &*index : nullptr);

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot write predictions: " + out_path);
    for (const Instance& inst : instances) {
        Tape tape;
        const Tensor dist = model.forward(tape, inst);

        std::vector<std::size_t> order(dist.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (dist[a] != dist[b]) return dist[a] > dist[b];
            return a < b;
        });

        nlohmann::json top5 = nlohmann::json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
            top5.push_back({model.vocab.token(order[i]), dist[order[i]]});
        }
        nlohmann::json j;
        j["id"] = inst.id;
        j["answer"] = predict_answer(dist, model.vocab);
        j["top5"] = std::move(top5);
        out << j.dump() << "\n";
    }
    std::cout << "wrote predictions for " << instances.size() << " instances to " << out_path
              << "\n";
    return 0;
}

int cmd_compile_layout(const std::string& parse_path, const std::string& mode,
                       const std::string& measure_for, const std::string& top) {
    const ParseMode parse_mode = parse_mode_from_flag(mode);
    const TopPolicy policy = policy_from_flag(measure_for);
    TopModule top_module = TopModule::kAuto;
    if (top == "describe") {
        top_module = TopModule::kDescribe;
    } else if (top == "measure") {
        top_module = TopModule::kMeasure;
    } else if (top != "auto") {
        throw Error("unknown --top value: " + top);
    }

    for (const auto& sentence : read_dep_parse_file(parse_path)) {
        const Layout layout = compile_from_parse(sentence, parse_mode, top_module, policy);
        type_check(layout);
        std::cout << print_layout(layout) << "\n";
    }
    return 0;
}

int cmd_kb_index(const std::string& abstracts, const std::string& embeddings,
                 const std::string& out) {
    const IngestResult ingest = ingest_abstracts(abstracts);
    const EmbeddingTable table = EmbeddingTable::from_text_file(embeddings);
    const KbIndex index = KbIndex::build(ingest.docs, table);
    index.save(out);
    std::cout << "indexed " << ingest.docs.size() << " docs (" << ingest.dropped
              << " dropped by the noun filter, " << ingest.malformed << " malformed lines) to "
              << out << "\n";
    return 0;
}

int cmd_kb_query(const std::string& index_path, const std::string& question, std::size_t k) {
    const KbIndex index = KbIndex::load(index_path);
    const std::vector<std::string> nouns = extract_query_nouns(tokenize_text(question));
    std::cout << "query nouns:";
    for (const std::string& n : nouns) std::cout << ' ' << n;
    std::cout << "\n";
    for (const SearchHit& hit : index.search(nouns, k)) {
        std::cout << hit.doc << "\t" << index.title(hit.doc) << "\t" << hit.score << "\n";
    }
    return 0;
}

struct GenArgs {
    std::size_t n = 200, grid = 5, channels = 16, emb_dim = 64;
    double caption_rate = 1.0, noise = 0.05;
    std::string templates = "all";
    std::uint64_t seed = 0;
    std::string out, emb_out, abstracts_out;
};

int cmd_gen_synth(const GenArgs& args) {
    SynthConfig cfg;
    cfg.seed = args.seed;
    cfg.n = args.n;
    cfg.height = args.grid;
    cfg.width = args.grid;
    cfg.channels = args.channels;
    cfg.caption_rate = args.caption_rate;
    cfg.noise = args.noise;
    cfg.emb_dim = args.emb_dim;
    if (args.templates == "all") {
        cfg.templates = SynthTemplates::kAll;
    } else if (args.templates == "color") {
        cfg.templates = SynthTemplates::kColor;
    } else if (args.templates == "count") {
        cfg.templates = SynthTemplates::kCount;
    } else if (args.templates == "exists") {
        cfg.templates = SynthTemplates::kExists;
    } else {
        throw Error("unknown --templates value: " + args.templates);
    }

    const SynthData data = gen_synthetic(cfg);
    write_instances_jsonl(args.out, data.instances);
    std::cout << "wrote " << data.instances.size() << " instances to " << args.out << "\n";
    if (!args.emb_out.empty()) {
        write_embeddings_file(args.emb_out, data.embeddings);
        std::cout << "wrote " << data.embeddings.size() << " embeddings to " << args.emb_out
                  << "\n";
    }
    if (!args.abstracts_out.empty()) {
        write_abstracts_file(args.abstracts_out, data.abstracts);
        std::cout << "wrote " << data.abstracts.size() << " abstracts to " << args.abstracts_out
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"modnet: neural module networks with caption and knowledge enrichment"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
    train->add_option("--model", train_args.model,
                      "variant: nmn, nmn+cap, nmn+capattn, nmn+kb, cap-only")
        ->capture_default_str();
    train->add_option("--data", train_args.data, "training instances (jsonl)")->required();
    train->add_option("--val", train_args.val, "validation instances (jsonl; defaults to --data)");
    train->add_option("--embeddings", train_args.embeddings, "pretrained embedding text file");
    train->add_option("--index", train_args.index, "kb index (required for nmn+kb)");
    train->add_option("--out", train_args.out, "checkpoint output path")->required();
    train->add_option("--metrics-out", train_args.metrics_out,
                      "metrics log path (default: <out>.metrics.log)");
    train->add_option("--batch", train_args.batch, "batch size")->capture_default_str();
    train->add_option("--epochs", train_args.epochs, "max epochs")->capture_default_str();
    train->add_option("--patience", train_args.patience, "early-stopping patience")
        ->capture_default_str();
    train->add_option("--answers-k", train_args.answers_k, "answer vocabulary size")
        ->capture_default_str();
    train->add_option("--q-hidden", train_args.q_hidden, "question LSTM hidden size")
        ->capture_default_str();
    train->add_option("--c-hidden", train_args.c_hidden, "caption LSTM hidden size")
        ->capture_default_str();
    train->add_option("--attn-k", train_args.attn_k, "caption attention hidden size")
        ->capture_default_str();
    train->add_option("--kb-topk", train_args.kb_topk, "retrieved docs per question")
        ->capture_default_str();
    train->add_option("--parse-mode,--mode", train_args.parse_mode, "short or longest")
        ->capture_default_str();
    train->add_option("--measure-for", train_args.measure_for,
                      "measure top module for: none, count, yesno, both")
        ->capture_default_str();
    train->add_option("--seed", train_args.seed, "seed for all randomness")
        ->capture_default_str();

    std::string eval_ckpt, eval_data, eval_index, eval_metric = "exact";
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--data,--test", eval_data, "instances to evaluate (jsonl)")->required();
    eval_cmd->add_option("--index", eval_index, "kb index (required for nmn+kb)");
    eval_cmd->add_option("--metric", eval_metric, "exact or consensus")->capture_default_str();

    std::string pred_ckpt, pred_data, pred_index, pred_out;
    CLI::App* predict = app.add_subcommand("predict", "write jsonl predictions");
    predict->add_option("--ckpt", pred_ckpt, "checkpoint path")->required();
    predict->add_option("--data", pred_data, "instances (jsonl)")->required();
    predict->add_option("--index", pred_index, "kb index (required for nmn+kb)");
    predict->add_option("--out", pred_out, "predictions output path")->required();

    std::string cl_parse, cl_mode = "short", cl_measure_for = "none", cl_top = "auto";
    CLI::App* compile = app.add_subcommand("compile-layout", "compile dependency parses");
    compile->add_option("--parse", cl_parse, "dependency parse file")->required();
    compile->add_option("--parse-mode,--mode", cl_mode, "short or longest")
        ->capture_default_str();
    compile->add_option("--measure-for", cl_measure_for,
                        "measure top module for: none, count, yesno, both")
        ->capture_default_str();
    compile->add_option("--top", cl_top, "auto, describe or measure")->capture_default_str();

    std::string ki_abstracts, ki_embeddings, ki_out;
    CLI::App* kb_index = app.add_subcommand("kb-index", "build a kb index from abstracts");
    kb_index->add_option("--abstracts", ki_abstracts, "abstracts tsv (title<TAB>text)")
        ->required();
    kb_index->add_option("--embeddings", ki_embeddings, "embedding text file")->required();
    kb_index->add_option("--out", ki_out, "index output path")->required();

    std::string kq_index, kq_question;
    std::size_t kq_k = 3;
    CLI::App* kb_query = app.add_subcommand("kb-query", "rank documents for a question");
    kb_query->add_option("--index", kq_index, "kb index path")->required();
    kb_query->add_option("--question", kq_question, "question text")->required();
    kb_query->add_option("--k,--kb-topk", kq_k, "number of hits")->capture_default_str();

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-synth", "generate a synthetic shapes dataset");
    gen->add_option("--n", gen_args.n, "number of instances")->capture_default_str();
    gen->add_option("--grid", gen_args.grid, "grid side length (H = W)")->capture_default_str();
    gen->add_option("--channels", gen_args.channels, "feature channels (>= 8)")
        ->capture_default_str();
    gen->add_option("--caption-rate", gen_args.caption_rate,
                    "probability a caption contains the answer token")
        ->capture_default_str();
    gen->add_option("--noise", gen_args.noise, "feature noise sigma")->capture_default_str();
    gen->add_option("--templates", gen_args.templates, "all, color, count or exists")
        ->capture_default_str();
    gen->add_option("--emb-dim", gen_args.emb_dim, "embedding dimension")->capture_default_str();
    gen->add_option("--seed", gen_args.seed, "seed for all randomness")->capture_default_str();
    gen->add_option("--out", gen_args.out, "instances output path (jsonl)")->required();
    gen->add_option("--emb-out", gen_args.emb_out, "embeddings output path");
    gen->add_option("--abstracts-out", gen_args.abstracts_out, "abstracts output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: usage: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*train) return cmd_train(train_args);
        if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_index, eval_metric);
        if (*predict) return cmd_predict(pred_ckpt, pred_data, pred_index, pred_out);
        if (*compile) return cmd_compile_layout(cl_parse, cl_mode, cl_measure_for, cl_top);
        if (*kb_index) return cmd_kb_index(ki_abstracts, ki_embeddings, ki_out);
        if (*kb_query) return cmd_kb_query(kq_index, kq_question, kq_k);
        if (*gen) return cmd_gen_synth(gen_args);
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return kExitIo;
    } catch (const FormatError& e) {
        std::cerr << "error: format: " << e.what() << "\n";
        return kExitFormat;
    } catch (const DimensionError& e) {
        std::cerr << "error: dimension: " << e.what() << "\n";
        return kExitDimension;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
