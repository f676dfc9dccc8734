#pragma once

#include "rlink/city_trie.hpp"
#include "rlink/entity_store.hpp"
#include "rlink/scoring.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rlink::scoring {

enum class NodeKind { Leaf, Sum, Max };

/// Attribute compared by a leaf.
enum class Field { Name, Street, Postal, City, Country, Sic };

std::string_view to_string(Field f) noexcept;

struct TreeWeights {
    double name = 0.6;
    double address = 0.3;
    double industry = 0.1;
    // Inside one address.
    double street = 0.4;
    double postal = 0.2;
    double city = 0.3;
    double country = 0.1;
};

struct Node {
    NodeKind kind = NodeKind::Leaf;
    /// Weight within the parent SUM (ignored under MAX and at the root).
    double weight = 1.0;

    // Leaf payload.
    Field field = Field::Name;
    std::string value;
    NameInput name;  // prepared query name for Field::Name

    std::vector<Node> children;
};

/// Everything a leaf needs besides the query value and the record.
struct ScoringEnv {
    NameParams name;
    double tau_km = 30.0;
    const textnorm::LegalEntityLexicon* lexicon = nullptr;
    const geo::CityTrie* trie = nullptr;
};

/// Per-leaf score captured during evaluation, keyed by field.
struct SubScore {
    Field field;
    double score;
};

class ScoringTree {
public:
    ScoringTree() = default;
    explicit ScoringTree(Node root) : root_(std::move(root)) {}

    const Node& root() const noexcept { return root_; }

    /// Score of `record` in [0,1]. Leaves whose record attribute is missing are
    /// skipped and the remaining SUM weights renormalized. When `subscores` is
    /// given, the best score per field is recorded there.
    double evaluate(const store::Record& record, const ScoringEnv& env, std::vector<SubScore>* subscores = nullptr) const;

private:
    Node root_;
};

/// Builds the tree for one query. `short_namer` (optional) supplies the short
/// name of the query's company name.
ScoringTree build_scoring_tree(const store::QueryRecord& query, const TreeWeights& weights = {},
                               const std::function<std::string(std::string_view)>& short_namer = {});

/// Score of one leaf against a record; nullopt when the record lacks the attribute.
std::optional<double> score_leaf(const Node& leaf, const store::Record& record, const ScoringEnv& env);

}  // namespace rlink::scoring
