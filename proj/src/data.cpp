#include "modnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "modnet/binio.hpp"

namespace modnet {

using nlohmann::json;

AnswerVocab AnswerVocab::from_counts(const std::map<std::string, std::size_t>& counts,
                                     std::size_t k) {
    if (k == 0) throw Error("answer vocab: k must be at least 1");
    if (counts.empty()) throw Error("answer vocab: no answers present");
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;  // lexicographic tie-break
    });
    if (ranked.size() > k) ranked.resize(k);
    std::vector<std::string> answers;
    answers.reserve(ranked.size());
    for (auto& [token, count] : ranked) answers.push_back(std::move(token));
    return from_tokens(std::move(answers));
}

AnswerVocab AnswerVocab::from_tokens(std::vector<std::string> answers) {
    AnswerVocab vocab;
    vocab.answers_ = std::move(answers);
    for (std::size_t i = 0; i < vocab.answers_.size(); ++i) {
        auto [it, fresh] = vocab.index_.emplace(vocab.answers_[i], i);
        if (!fresh) throw Error("answer vocab: duplicate answer '" + vocab.answers_[i] + "'");
    }
    return vocab;
}

const std::string& AnswerVocab::token(std::size_t index) const {
    static const std::string kOther = kOtherAnswer;
    if (index == answers_.size()) return kOther;
    if (index > answers_.size()) throw Error("answer vocab: index out of range");
    return answers_[index];
}

std::size_t AnswerVocab::index_or_other(const std::string& answer) const {
    const auto it = index_.find(answer);
    return it == index_.end() ? other_index() : it->second;
}

std::string most_frequent_answer(const std::vector<std::string>& answers) {
    if (answers.empty()) throw Error("instance has no answers");
    std::map<std::string, std::size_t> counts;
    for (const std::string& a : answers) ++counts[a];
    std::string best;
    std::size_t best_count = 0;
    for (const auto& [a, c] : counts) {
        if (c > best_count) {  // map order makes ties lexicographic
            best = a;
            best_count = c;
        }
    }
    return best;
}

AnswerVocab build_answer_vocab(const std::vector<Instance>& instances, std::size_t k) {
    std::map<std::string, std::size_t> counts;
    for (const Instance& inst : instances) {
        for (const std::string& a : inst.answers) ++counts[a];
    }
    return AnswerVocab::from_counts(counts, k);
}

Tensor normalize_features(const Tensor& grid) {
    if (grid.size() == 0) throw Error("normalize_features: empty grid");
    const std::vector<double>& v = grid.values();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double std_guarded = std::max(std::sqrt(var), 1e-8);

    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / std_guarded;
    return Tensor::from(grid.shape(), std::move(out));
}

namespace {

std::vector<std::string> string_list(const json& j, const std::string& what) {
    if (!j.is_array()) throw FormatError(what + " must be an array of strings");
    std::vector<std::string> out;
    out.reserve(j.size());
    for (const json& item : j) out.push_back(item.get<std::string>());
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

Shape shape_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("features shape must be [D,H,W]");
    Shape shape;
    for (const json& d : j) shape.push_back(d.get<std::size_t>());
    return shape;
}

Tensor features_from_ref(const json& ref, const std::filesystem::path& base_dir) {
    const Shape shape = shape_from_json(ref.at("shape"));
    std::filesystem::path path = ref.at("path").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    const std::size_t offset = ref.value("offset", std::size_t{0});

    const std::vector<std::uint8_t> bytes = binio::read_file(path.string());
    binio::Reader r{bytes.data(), bytes.size(), 0, "feature file " + path.string()};
    r.at = offset;
    const std::size_t n = shape_numel(shape);
    std::vector<double> values(n);
    for (double& v : values) v = static_cast<double>(r.f32());
    return Tensor::from(shape, std::move(values));
}

std::vector<DepToken> dep_parse_from_json(const json& j) {
    std::vector<DepToken> tokens;
    for (const json& row : j) {
        if (!row.is_array() || row.size() != 5) {
            throw FormatError("dep_parse rows must be [index, form, head, relation, pos]");
        }
        DepToken t;
        t.index = row[0].get<int>();
        t.form = lower(row[1].get<std::string>());
        t.head = row[2].get<int>();
        t.relation = row[3].get<std::string>();
        t.pos = pos_from_string(row[4].get<std::string>());
        tokens.push_back(std::move(t));
    }
    return tokens;
}

json dep_parse_to_json(const std::vector<DepToken>& tokens) {
    json rows = json::array();
    for (const DepToken& t : tokens) {
        rows.push_back(json::array({t.index, t.form, t.head, t.relation, to_string(t.pos)}));
    }
    return rows;
}

std::vector<std::string> lowered(std::vector<std::string> tokens) {
    for (std::string& t : tokens) t = lower(std::move(t));
    return tokens;
}

}  // namespace

std::vector<Instance> load_instances_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instances file: " + path);
    const std::filesystem::path base_dir = std::filesystem::path(path).parent_path();

    std::vector<Instance> instances;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        try {
            Instance inst;
            inst.id = j.at("id").get<std::string>();
            inst.question = lowered(string_list(j.at("question"), "question"));
            inst.caption = lowered(string_list(j.at("caption"), "caption"));
            inst.answers = lowered(string_list(j.at("answers"), "answers"));
            if (inst.answers.empty() || inst.answers.size() > 10) {
                throw FormatError("answers must hold 1..10 strings");
            }
            if (j.contains("features")) {
                const json& f = j.at("features");
                const Shape shape = shape_from_json(f.at("shape"));
                std::vector<double> values;
                values.reserve(shape_numel(shape));
                for (const json& v : f.at("data")) values.push_back(v.get<double>());
                inst.features = Tensor::from(shape, std::move(values));
            } else if (j.contains("features_ref")) {
                inst.features = features_from_ref(j.at("features_ref"), base_dir);
            } else {
                throw FormatError("instance needs features or features_ref");
            }
            if (j.contains("dep_parse")) inst.dep_parse = dep_parse_from_json(j.at("dep_parse"));
            if (j.contains("layout")) inst.layout_text = j.at("layout").get<std::string>();
            instances.push_back(std::move(inst));
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (instances.empty()) throw FormatError(path + ": no instances");
    return instances;
}

void write_instances_jsonl(const std::string& path, const std::vector<Instance>& instances) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write instances file: " + path);
    for (const Instance& inst : instances) {
        json j;
        j["id"] = inst.id;
        j["question"] = inst.question;
        j["caption"] = inst.caption;
        j["answers"] = inst.answers;
        j["features"] = {{"shape", inst.features.shape()}, {"data", inst.features.values()}};
        if (inst.dep_parse) j["dep_parse"] = dep_parse_to_json(*inst.dep_parse);
        if (inst.layout_text) j["layout"] = *inst.layout_text;
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing instances file: " + path);
}

const std::vector<std::string>& synth_colors() {
    static const std::vector<std::string> kColors = {"red", "green", "blue", "yellow"};
    return kColors;
}

const std::vector<std::string>& synth_shapes() {
    static const std::vector<std::string> kShapes = {"circle", "square", "triangle", "star"};
    return kShapes;
}

namespace {

struct SceneObject {
    std::size_t cell;
    std::size_t shape;
    std::size_t color;
};

struct SynthBuilder {
    const SynthConfig& cfg;
    std::mt19937_64 rng;

    explicit SynthBuilder(const SynthConfig& config) : cfg(config), rng(config.seed) {}

    std::size_t uniform(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(rng);
    }

    std::vector<std::size_t> distinct_cells(std::size_t count) {
        const std::size_t total = cfg.height * cfg.width;
        std::vector<std::size_t> cells;
        while (cells.size() < count) {
            const std::size_t c = uniform(total);
            if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
        }
        return cells;
    }

    Tensor render(const std::vector<SceneObject>& objects) {
        const std::size_t hw = cfg.height * cfg.width;
        std::vector<double> feat(cfg.channels * hw, 0.0);
        for (const SceneObject& obj : objects) {
            feat[obj.shape * hw + obj.cell] = 1.0;
            feat[(synth_shapes().size() + obj.color) * hw + obj.cell] = 1.0;
        }
        if (cfg.noise > 0.0) {
            std::normal_distribution<double> jitter(0.0, cfg.noise);
            for (double& v : feat) v += jitter(rng);
        }
        return Tensor::from({cfg.channels, cfg.height, cfg.width}, std::move(feat));
    }

    std::vector<DepToken> color_parse(const std::string& shape) {
        return {
            {1, "what", 5, "det", Pos::kWh},    {2, "color", 5, "nsubj", Pos::kNoun},
            {3, "is", 5, "cop", Pos::kOther},   {4, "the", 5, "det", Pos::kOther},
            {5, shape, 0, "root", Pos::kNoun},
        };
    }

    std::vector<DepToken> count_parse(const std::string& shapes) {
        return {
            {1, "how", 3, "advmod", Pos::kWh},  {2, "many", 3, "amod", Pos::kOther},
            {3, shapes, 0, "root", Pos::kNoun}, {4, "are", 3, "cop", Pos::kOther},
            {5, "there", 3, "expl", Pos::kOther},
        };
    }

    std::vector<DepToken> exists_parse(const std::string& shape) {
        return {
            {1, "is", 4, "cop", Pos::kOther},
            {2, "there", 4, "expl", Pos::kOther},
            {3, "a", 4, "det", Pos::kOther},
            {4, shape, 0, "root", Pos::kNoun},
        };
    }

    std::vector<std::string> caption_for(const std::string& answer, SynthTemplates kind,
                                         const std::string& shape_word, bool informative) {
        if (!informative) {
            switch (uniform(3)) {
                case 0: return {"a", "plain", "scene", "with", "things"};
                case 1: return {"just", "an", "ordinary", "image"};
                default: return {"nothing", "special", "here", "today"};
            }
        }
        switch (kind) {
            case SynthTemplates::kColor: return {"a", answer, shape_word, "in", "the", "picture"};
            case SynthTemplates::kCount: return {"there", "are", answer, shape_word, "here"};
            default: return {"maybe", answer, "for", "this", "one"};
        }
    }

    Instance make_instance(std::size_t index) {
        SynthTemplates kind = cfg.templates;
        if (kind == SynthTemplates::kAll) {
            const std::size_t pick = uniform(3);
            kind = pick == 0 ? SynthTemplates::kColor
                             : (pick == 1 ? SynthTemplates::kCount : SynthTemplates::kExists);
        }

        const std::size_t num_shapes = synth_shapes().size();
        const std::size_t num_colors = synth_colors().size();
        std::vector<SceneObject> objects;
        std::string answer;
        std::string shape_word;
        Instance inst;

        if (kind == SynthTemplates::kColor) {
            const std::size_t shape = uniform(num_shapes);
            const std::size_t color = uniform(num_colors);
            const std::size_t distractors = uniform(3);
            const auto cells = distinct_cells(1 + distractors);
            objects.push_back({cells[0], shape, color});
            for (std::size_t d = 0; d < distractors; ++d) {
                std::size_t other = uniform(num_shapes - 1);
                if (other >= shape) ++other;  // keep the queried shape unique
                objects.push_back({cells[1 + d], other, uniform(num_colors)});
            }
            answer = synth_colors()[color];
            shape_word = synth_shapes()[shape];
            inst.question = {"what", "color", "is", "the", shape_word};
            inst.dep_parse = color_parse(shape_word);
        } else if (kind == SynthTemplates::kCount) {
            const std::size_t shape = uniform(num_shapes);
            const std::size_t count = uniform(4);  // 0..3
            std::size_t distractors = uniform(3);
            if (count == 0 && distractors == 0) distractors = 1;
            const auto cells = distinct_cells(count + distractors);
            for (std::size_t i = 0; i < count; ++i) {
                objects.push_back({cells[i], shape, uniform(num_colors)});
            }
            for (std::size_t d = 0; d < distractors; ++d) {
                std::size_t other = uniform(num_shapes - 1);
                if (other >= shape) ++other;
                objects.push_back({cells[count + d], other, uniform(num_colors)});
            }
            answer = std::to_string(count);
            shape_word = synth_shapes()[shape] + "s";
            inst.question = {"how", "many", shape_word, "are", "there"};
            inst.dep_parse = count_parse(shape_word);
        } else {
            const std::size_t shape = uniform(num_shapes);
            const bool present = uniform(2) == 0;
            if (present) {
                const std::size_t copies = 1 + uniform(2);
                const std::size_t distractors = uniform(3);
                const auto cells = distinct_cells(copies + distractors);
                for (std::size_t i = 0; i < copies; ++i) {
                    objects.push_back({cells[i], shape, uniform(num_colors)});
                }
                for (std::size_t d = 0; d < distractors; ++d) {
                    std::size_t other = uniform(num_shapes - 1);
                    if (other >= shape) ++other;
                    objects.push_back({cells[copies + d], other, uniform(num_colors)});
                }
            } else {
                const std::size_t others = 1 + uniform(3);
                const auto cells = distinct_cells(others);
                for (std::size_t i = 0; i < others; ++i) {
                    std::size_t other = uniform(num_shapes - 1);
                    if (other >= shape) ++other;
                    objects.push_back({cells[i], other, uniform(num_colors)});
                }
            }
            answer = present ? "yes" : "no";
            shape_word = synth_shapes()[shape];
            inst.question = {"is", "there", "a", shape_word};
            inst.dep_parse = exists_parse(shape_word);
        }

        std::bernoulli_distribution informative(cfg.caption_rate);
        inst.caption = caption_for(answer, kind, shape_word, informative(rng));
        inst.features = render(objects);
        inst.answers.assign(10, answer);

        std::ostringstream id;
        id << "synth-" << std::setw(6) << std::setfill('0') << index;
        inst.id = id.str();
        return inst;
    }
};

}  // namespace

SynthData gen_synthetic(const SynthConfig& config) {
    if (config.n == 0) throw Error("gen_synthetic: n must be at least 1");
    if (config.channels < synth_shapes().size() + synth_colors().size()) {
        throw Error("gen_synthetic: need at least " +
                    std::to_string(synth_shapes().size() + synth_colors().size()) + " channels");
    }
    SynthBuilder builder(config);
    SynthData data;
    data.instances.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        data.instances.push_back(builder.make_instance(i));
    }

    // Embeddings for every token the dataset can produce, in sorted order so
    // the draw sequence is reproducible.
    std::map<std::string, std::vector<double>> embeddings;
    std::set<std::string> tokens;
    for (const Instance& inst : data.instances) {
        tokens.insert(inst.question.begin(), inst.question.end());
        tokens.insert(inst.caption.begin(), inst.caption.end());
        tokens.insert(inst.answers.begin(), inst.answers.end());
    }
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    for (const std::string& tok : tokens) {
        std::vector<double> vec(config.emb_dim);
        for (double& v : vec) v = unit(builder.rng);
        embeddings.emplace(tok, std::move(vec));
    }
    data.embeddings = std::move(embeddings);

    for (const std::string& shape : synth_shapes()) {
        std::string title = shape;
        title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
        data.abstracts.emplace_back(
            title, "a " + shape + " is a simple shape. a " + shape +
                       " may be red green blue or yellow. pictures often show a " + shape +
                       " near other shapes. " + shape + "s can appear several times.");
    }
    for (const std::string& color : synth_colors()) {
        std::string title = color;
        title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
        data.abstracts.emplace_back(
            title, color + " is a color. a shape painted " + color + " looks " + color +
                       " in a picture. " + color + " often marks a circle square triangle or star.");
    }
    return data;
}

void write_embeddings_file(const std::string& path,
                           const std::map<std::string, std::vector<double>>& embeddings) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write embeddings file: " + path);
    out.precision(17);
    for (const auto& [token, vec] : embeddings) {
        out << token;
        for (double v : vec) out << ' ' << v;
        out << '\n';
    }
    if (!out) throw IoError("failed writing embeddings file: " + path);
}

void write_abstracts_file(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& abstracts) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write abstracts file: " + path);
    for (const auto& [title, text] : abstracts) out << title << '\t' << text << '\n';
    if (!out) throw IoError("failed writing abstracts file: " + path);
}

}  // namespace modnet
