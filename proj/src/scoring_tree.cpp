#include "rlink/scoring_tree.hpp"

#include <algorithm>
#include <array>

namespace rlink::scoring {

namespace {

Node leaf(Field field, std::string value) {
    Node n;
    n.kind = NodeKind::Leaf;
    n.field = field;
    n.value = std::move(value);
    return n;
}

/// SUM over weighted children, renormalized; a single child is returned as is.
Node sum_of(std::vector<std::pair<Node, double>> parts) {
    if (parts.size() == 1) return std::move(parts.front().first);
    double total = 0;
    for (const auto& p : parts) total += p.second;
    Node n;
    n.kind = NodeKind::Sum;
    for (auto& [child, w] : parts) {
        child.weight = total > 0 ? w / total : 1.0 / static_cast<double>(parts.size());
        n.children.push_back(std::move(child));
    }
    return n;
}

Node max_of(std::vector<Node> children) {
    if (children.size() == 1) return std::move(children.front());
    Node n;
    n.kind = NodeKind::Max;
    n.children = std::move(children);
    return n;
}

std::optional<double> eval(const Node& node, const store::Record& record, const ScoringEnv& env,
                           std::vector<SubScore>* subs) {
    switch (node.kind) {
        case NodeKind::Leaf: {
            auto s = score_leaf(node, record, env);
            if (s && subs) {
                auto it = std::find_if(subs->begin(), subs->end(), [&](const SubScore& x) { return x.field == node.field; });
                if (it == subs->end()) {
                    subs->push_back({node.field, *s});
                } else {
                    it->score = std::max(it->score, *s);
                }
            }
            return s;
        }
        case NodeKind::Sum: {
            double acc = 0, mass = 0;
            for (const auto& c : node.children) {
                if (auto s = eval(c, record, env, subs)) {
                    acc += c.weight * *s;
                    mass += c.weight;
                }
            }
            if (mass <= 0) return std::nullopt;
            return acc / mass;
        }
        case NodeKind::Max: {
            std::optional<double> best;
            for (const auto& c : node.children) {
                if (auto s = eval(c, record, env, subs)) best = std::max(best.value_or(0.0), *s);
            }
            return best;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Field f) noexcept {
    switch (f) {
        case Field::Name: return "name";
        case Field::Street: return "street";
        case Field::Postal: return "postal";
        case Field::City: return "city";
        case Field::Country: return "country";
        case Field::Sic: return "sic";
    }
    return "unknown";
}

ScoringTree build_scoring_tree(const store::QueryRecord& query, const TreeWeights& weights,
                               const std::function<std::string(std::string_view)>& short_namer) {
    std::vector<std::pair<Node, double>> groups;

    Node name = leaf(Field::Name, query.name);
    name.name = NameInput::from_raw(query.name, short_namer ? short_namer(query.name) : std::string{});
    groups.emplace_back(std::move(name), weights.name);

    std::vector<Node> addresses;
    for (const auto& a : query.addresses) {
        std::vector<std::pair<Node, double>> parts;
        if (!textnorm::clean_light(a.street).empty()) parts.emplace_back(leaf(Field::Street, a.street), weights.street);
        if (!a.postal.empty()) parts.emplace_back(leaf(Field::Postal, a.postal), weights.postal);
        if (!textnorm::clean_light(a.city).empty()) parts.emplace_back(leaf(Field::City, a.city), weights.city);
        if (!a.country.empty()) parts.emplace_back(leaf(Field::Country, a.country), weights.country);
        if (!parts.empty()) addresses.push_back(sum_of(std::move(parts)));
    }
    if (!addresses.empty()) groups.emplace_back(max_of(std::move(addresses)), weights.address);

    std::vector<Node> sics;
    for (const auto& s : query.sics) {
        if (store::is_valid_sic(s)) sics.push_back(leaf(Field::Sic, s));
    }
    if (!sics.empty()) groups.emplace_back(max_of(std::move(sics)), weights.industry);

    Node root = sum_of(std::move(groups));
    root.weight = 1.0;
    return ScoringTree(std::move(root));
}

std::optional<double> score_leaf(const Node& node, const store::Record& record, const ScoringEnv& env) {
    switch (node.field) {
        case Field::Name: {
            if (node.name.clean.empty() || record.clean_name.empty()) return std::nullopt;
            NameContext ctx;
            ctx.lexicon = env.lexicon;
            ctx.trie = env.trie;
            if (env.trie && !record.city.empty()) ctx.anchor = env.trie->lookup(record.city);
            const NameInput rec{record.clean_name, textnorm::clean_light(record.short_name).text};
            return company_name_score(node.name, rec, env.name, ctx);
        }
        case Field::Street:
            if (record.clean_street.empty()) return std::nullopt;
            return street_score(node.value, record.street);
        case Field::Postal:
            if (record.postal.empty()) return std::nullopt;
            return postal_score(node.value, record.postal);
        case Field::City:
            if (record.clean_city.empty()) return std::nullopt;
            return city_score(node.value, record.city, env.trie, env.tau_km);
        case Field::Country:
            if (record.country.empty()) return std::nullopt;
            return country_score(node.value, record.country);
        case Field::Sic:
            if (!store::is_valid_sic(record.sic)) return std::nullopt;
            return industry_score(node.value, record.sic);
    }
    return std::nullopt;
}

double ScoringTree::evaluate(const store::Record& record, const ScoringEnv& env, std::vector<SubScore>* subscores) const {
    return std::clamp(eval(root_, record, env, subscores).value_or(0.0), 0.0, 1.0);
}

}  // namespace rlink::scoring
