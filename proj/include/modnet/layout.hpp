#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "modnet/errors.hpp"

namespace modnet {

/// The four module kinds and their port signatures:
///   Find:     ImageGrid -> AttentionMap
///   And:      AttentionMap x AttentionMap -> AttentionMap
///   Describe: ImageGrid x AttentionMap -> LabelScores
///   Measure:  AttentionMap -> LabelScores
/// ImageGrid is an ambient input: Find and Describe read it implicitly.
enum class ModuleKind { kFind, kAnd, kDescribe, kMeasure };

enum class PortType { kImageGrid, kAttentionMap, kLabelScores };

const char* to_string(ModuleKind kind);
const char* to_string(PortType port);

/// Typed tree of module instantiations; the compiled form of a question.
struct Layout {
    ModuleKind kind = ModuleKind::kFind;
    std::string word;  // lowercase token, Find only
    std::vector<Layout> children;
};

/// Parses the S-expression layout language, e.g.
/// "Describe(And(Find(person), Find(playing)))". Module names are
/// case-insensitive; words are lowercased. Throws FormatError with the byte
/// position of the offense.
Layout parse_layout(const std::string& text);

/// Canonical form: capitalized module names, ", " separators.
/// parse_layout(print_layout(x)) reproduces x.
std::string print_layout(const Layout& layout);

/// Checks arity and port composition and that the root yields LabelScores.
/// Throws FormatError naming the first offending node path (root, root/0,
/// root/0/1, ...) with expected and actual port types.
void type_check(const Layout& layout);

enum class Pos { kNoun, kVerb, kAdp, kWh, kOther };

Pos pos_from_string(const std::string& tag);
const char* to_string(Pos pos);

/// One token of a dependency parse; head 0 marks the root.
struct DepToken {
    int index = 0;  // 1-based
    std::string form;
    int head = 0;
    std::string relation;
    Pos pos = Pos::kOther;
};

/// Reads tab-separated "index \t form \t head \t relation \t pos" lines,
/// blank-line separated sentences.
std::vector<std::vector<DepToken>> read_dep_parses(std::istream& in);
std::vector<std::vector<DepToken>> read_dep_parse_file(const std::string& path);
std::string write_dep_parse(const std::vector<DepToken>& tokens);

enum class ParseMode { kShort, kLongest };
enum class TopModule { kAuto, kDescribe, kMeasure };

/// Which question classes get a Measure top module under top=auto.
struct TopPolicy {
    bool measure_for_count = false;
    bool measure_for_yesno = false;
};

/// Measure iff (yes/no flag and the question starts with an auxiliary) or
/// (counting flag and it starts with "how many"); Describe otherwise.
ModuleKind top_module_policy(const std::vector<std::string>& question_tokens,
                             const TopPolicy& policy);

/// Compiles a dependency parse into a layout: collect NOUN and VERB tokens
/// within 2 hops of the wh-token (ADP tokens contribute their NOUN
/// dependent); short mode keeps the nearest noun, longest keeps all words
/// merged left-to-right by nested And; the top module comes from the policy
/// unless forced.
Layout compile_from_parse(const std::vector<DepToken>& tokens, ParseMode mode, TopModule top,
                          const TopPolicy& policy = {});

bool is_auxiliary(const std::string& token);

}  // namespace modnet
