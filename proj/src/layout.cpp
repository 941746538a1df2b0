#include "modnet/layout.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace modnet {

const char* to_string(ModuleKind kind) {
    switch (kind) {
        case ModuleKind::kFind: return "Find";
        case ModuleKind::kAnd: return "And";
        case ModuleKind::kDescribe: return "Describe";
        case ModuleKind::kMeasure: return "Measure";
    }
    return "?";
}

const char* to_string(PortType port) {
    switch (port) {
        case PortType::kImageGrid: return "ImageGrid";
        case PortType::kAttentionMap: return "AttentionMap";
        case PortType::kLabelScores: return "LabelScores";
    }
    return "?";
}

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::size_t arity(ModuleKind kind) {
    switch (kind) {
        case ModuleKind::kFind: return 0;
        case ModuleKind::kAnd: return 2;
        case ModuleKind::kDescribe: return 1;
        case ModuleKind::kMeasure: return 1;
    }
    return 0;
}

PortType output_port(ModuleKind kind) {
    switch (kind) {
        case ModuleKind::kFind: return PortType::kAttentionMap;
        case ModuleKind::kAnd: return PortType::kAttentionMap;
        case ModuleKind::kDescribe: return PortType::kLabelScores;
        case ModuleKind::kMeasure: return PortType::kLabelScores;
    }
    return PortType::kLabelScores;
}

struct LayoutParser {
    const std::string& text;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError("layout: " + msg + " at position " + std::to_string(pos));
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    char peek() const { return pos < text.size() ? text[pos] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos;
    }

    std::string read_name() {
        skip_ws();
        const std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_' || text[pos] == '-')) {
            ++pos;
        }
        if (pos == start) fail("expected a name");
        return text.substr(start, pos - start);
    }

    Layout parse_node() {
        skip_ws();
        const std::size_t name_pos = pos;
        const std::string name = lower(read_name());
        ModuleKind kind;
        if (name == "find") {
            kind = ModuleKind::kFind;
        } else if (name == "and") {
            kind = ModuleKind::kAnd;
        } else if (name == "describe") {
            kind = ModuleKind::kDescribe;
        } else if (name == "measure") {
            kind = ModuleKind::kMeasure;
        } else {
            pos = name_pos;
            fail("unknown module name '" + name + "'");
        }

        skip_ws();
        expect('(');
        Layout node;
        node.kind = kind;
        if (kind == ModuleKind::kFind) {
            node.word = lower(read_name());
        } else {
            node.children.push_back(parse_node());
            while (true) {
                skip_ws();
                if (peek() == ',') {
                    ++pos;
                    node.children.push_back(parse_node());
                } else {
                    break;
                }
            }
            if (node.children.size() != arity(kind)) {
                fail(std::string(to_string(kind)) + " takes " + std::to_string(arity(kind)) +
                     " arguments, got " + std::to_string(node.children.size()));
            }
        }
        skip_ws();
        expect(')');
        return node;
    }
};

}  // namespace

Layout parse_layout(const std::string& text) {
    LayoutParser p{text};
    Layout root = p.parse_node();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing characters after layout");
    return root;
}

std::string print_layout(const Layout& layout) {
    std::string out = to_string(layout.kind);
    out += '(';
    if (layout.kind == ModuleKind::kFind) {
        out += layout.word;
    } else {
        for (std::size_t i = 0; i < layout.children.size(); ++i) {
            if (i) out += ", ";
            out += print_layout(layout.children[i]);
        }
    }
    out += ')';
    return out;
}

namespace {

PortType check_node(const Layout& node, const std::string& path) {
    if (node.children.size() != arity(node.kind)) {
        throw FormatError("type error at " + path + ": " + to_string(node.kind) + " takes " +
                          std::to_string(arity(node.kind)) + " children, got " +
                          std::to_string(node.children.size()));
    }
    if (node.kind == ModuleKind::kFind && node.word.empty()) {
        throw FormatError("type error at " + path + ": Find requires a word argument");
    }
    if (node.kind != ModuleKind::kFind && !node.word.empty()) {
        throw FormatError("type error at " + path + ": " + to_string(node.kind) +
                          " takes no word argument");
    }
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        const PortType got = check_node(node.children[i], path + "/" + std::to_string(i));
        if (got != PortType::kAttentionMap) {
            throw FormatError("type error at " + path + "/" + std::to_string(i) + ": " +
                              to_string(node.kind) + " expects AttentionMap input, got " +
                              to_string(got));
        }
    }
    return output_port(node.kind);
}

}  // namespace

void type_check(const Layout& layout) {
    const PortType root = check_node(layout, "root");
    if (root != PortType::kLabelScores) {
        throw FormatError("type error at root: layout must produce LabelScores, got " +
                          std::string(to_string(root)));
    }
}

Pos pos_from_string(const std::string& tag) {
    if (tag == "NOUN") return Pos::kNoun;
    if (tag == "VERB") return Pos::kVerb;
    if (tag == "ADP") return Pos::kAdp;
    if (tag == "WH") return Pos::kWh;
    if (tag == "OTHER") return Pos::kOther;
    throw FormatError("dep parse: unknown pos tag '" + tag + "'");
}

const char* to_string(Pos pos) {
    switch (pos) {
        case Pos::kNoun: return "NOUN";
        case Pos::kVerb: return "VERB";
        case Pos::kAdp: return "ADP";
        case Pos::kWh: return "WH";
        case Pos::kOther: return "OTHER";
    }
    return "OTHER";
}

std::vector<std::vector<DepToken>> read_dep_parses(std::istream& in) {
    std::vector<std::vector<DepToken>> sentences;
    std::vector<DepToken> current;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (!current.empty()) sentences.push_back(std::move(current));
            current.clear();
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 5) {
            throw FormatError("dep parse: line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, want 5");
        }
        DepToken tok;
        try {
            tok.index = std::stoi(fields[0]);
            tok.head = std::stoi(fields[2]);
        } catch (const std::exception&) {
            throw FormatError("dep parse: line " + std::to_string(line_no) +
                              ": non-numeric index or head");
        }
        tok.form = lower(fields[1]);
        tok.relation = fields[3];
        tok.pos = pos_from_string(fields[4]);
        current.push_back(std::move(tok));
    }
    if (!current.empty()) sentences.push_back(std::move(current));
    return sentences;
}

std::vector<std::vector<DepToken>> read_dep_parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open parse file: " + path);
    return read_dep_parses(in);
}

std::string write_dep_parse(const std::vector<DepToken>& tokens) {
    std::string out;
    for (const DepToken& t : tokens) {
        out += std::to_string(t.index) + "\t" + t.form + "\t" + std::to_string(t.head) + "\t" +
               t.relation + "\t" + to_string(t.pos) + "\n";
    }
    return out;
}

bool is_auxiliary(const std::string& token) {
    static const std::set<std::string> kAux = {"is",  "are",  "does", "do",    "was", "were",
                                               "has", "have", "can",  "could", "will", "would"};
    return kAux.count(token) > 0;
}

ModuleKind top_module_policy(const std::vector<std::string>& question_tokens,
                             const TopPolicy& policy) {
    if (question_tokens.empty()) throw Error("top_module_policy: empty question");
    if (policy.measure_for_yesno && is_auxiliary(lower(question_tokens.front()))) {
        return ModuleKind::kMeasure;
    }
    if (policy.measure_for_count && question_tokens.size() >= 2 &&
        lower(question_tokens[0]) == "how" && lower(question_tokens[1]) == "many") {
        return ModuleKind::kMeasure;
    }
    return ModuleKind::kDescribe;
}

namespace {

void validate_tree(const std::vector<DepToken>& tokens) {
    const int n = static_cast<int>(tokens.size());
    int roots = 0;
    for (const DepToken& t : tokens) {
        if (t.head < 0 || t.head > n) {
            throw FormatError("dep parse: head " + std::to_string(t.head) + " out of range");
        }
        if (t.head == 0) ++roots;
    }
    if (roots != 1) {
        throw FormatError("dep parse: expected exactly one root token, got " +
                          std::to_string(roots));
    }
}

// Hop distances from the wh token over the undirected tree (head <-> child).
std::vector<int> hop_distances(const std::vector<DepToken>& tokens, std::size_t from) {
    const std::size_t n = tokens.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (tokens[i].head > 0) {
            const std::size_t h = static_cast<std::size_t>(tokens[i].head - 1);
            adj[i].push_back(h);
            adj[h].push_back(i);
        }
    }
    std::vector<int> dist(n, -1);
    std::deque<std::size_t> q{from};
    dist[from] = 0;
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop_front();
        for (std::size_t v : adj[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    return dist;
}

struct Collected {
    std::string word;
    std::size_t position;  // 0-based sentence index of the contributing token
    int hops;              // tree distance of that token from the wh token
    bool noun;
};

}  // namespace

Layout compile_from_parse(const std::vector<DepToken>& tokens, ParseMode mode, TopModule top,
                          const TopPolicy& policy) {
    if (tokens.empty()) throw FormatError("compile_from_parse: empty sentence");
    validate_tree(tokens);
    if (std::none_of(tokens.begin(), tokens.end(),
                     [](const DepToken& t) { return t.pos == Pos::kNoun; })) {
        throw FormatError("uncompilable question: no noun present");
    }

    std::size_t wh = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].pos == Pos::kWh) {
            wh = i;
            break;
        }
    }
    const std::vector<int> dist = hop_distances(tokens, wh);

    std::vector<Collected> collected;
    auto already = [&](const std::string& word) {
        return std::any_of(collected.begin(), collected.end(),
                           [&](const Collected& c) { return c.word == word; });
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i == wh || dist[i] < 1 || dist[i] > 2) continue;
        const DepToken& t = tokens[i];
        if (t.pos == Pos::kNoun || t.pos == Pos::kVerb) {
            if (!already(t.form)) {
                collected.push_back({t.form, i, dist[i], t.pos == Pos::kNoun});
            }
        } else if (t.pos == Pos::kAdp) {
            // A prepositional token contributes its (leftmost) noun dependent.
            for (std::size_t j = 0; j < tokens.size(); ++j) {
                if (tokens[j].head == t.index && tokens[j].pos == Pos::kNoun) {
                    if (!already(tokens[j].form)) {
                        collected.push_back({tokens[j].form, j, dist[j], true});
                    }
                    break;
                }
            }
        }
    }

    // Guarantee at least one noun-backed Find: fall back to the noun nearest
    // the wh token anywhere in the sentence (fewest hops, then leftmost).
    if (std::none_of(collected.begin(), collected.end(),
                     [](const Collected& c) { return c.noun; })) {
        std::size_t best = tokens.size();
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i].pos != Pos::kNoun) continue;
            if (best == tokens.size() || dist[i] < dist[best]) best = i;
        }
        if (!already(tokens[best].form)) {
            collected.push_back({tokens[best].form, best, dist[best], true});
        }
    }

    std::vector<Collected> kept;
    if (mode == ParseMode::kShort) {
        std::size_t best = collected.size();
        for (std::size_t i = 0; i < collected.size(); ++i) {
            if (!collected[i].noun) continue;
            if (best == collected.size() || collected[i].hops < collected[best].hops ||
                (collected[i].hops == collected[best].hops &&
                 collected[i].position < collected[best].position)) {
                best = i;
            }
        }
        kept.push_back(collected[best]);
    } else {
        kept = collected;
        std::sort(kept.begin(), kept.end(),
                  [](const Collected& a, const Collected& b) { return a.position < b.position; });
    }

    Layout body{ModuleKind::kFind, kept.front().word, {}};
    for (std::size_t i = 1; i < kept.size(); ++i) {
        Layout merged{ModuleKind::kAnd, "", {}};
        merged.children.push_back(std::move(body));
        merged.children.push_back(Layout{ModuleKind::kFind, kept[i].word, {}});
        body = std::move(merged);
    }

    ModuleKind top_kind;
    if (top == TopModule::kDescribe) {
        top_kind = ModuleKind::kDescribe;
    } else if (top == TopModule::kMeasure) {
        top_kind = ModuleKind::kMeasure;
    } else {
        std::vector<std::string> forms;
        forms.reserve(tokens.size());
        for (const DepToken& t : tokens) forms.push_back(t.form);
        top_kind = top_module_policy(forms, policy);
    }

    Layout root{top_kind, "", {}};
    root.children.push_back(std::move(body));
    return root;
}

}  // namespace modnet
