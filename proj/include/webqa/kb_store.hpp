#pragma once

// Local Yago-style knowledge base: facts, entity types, surface-form
// labels, relation schemas and the derived undirected link sets.
//
// File formats (UTF-8, tab separated, '#' starts a comment line):
//   facts.tsv    subject  relation  object
//   types.tsv    entity   type
//   labels.tsv   surface form  entity
//   schemas.tsv  relation  subject_type  object_type  template1,template2,...

#include <algorithm>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "webqa/error.hpp"
#include "webqa/rng.hpp"
#include "webqa/text.hpp"

namespace webqa {

// Canonical underscore-joined entity name, e.g. "Marvin_Minsky".
struct EntityId {
  std::string name;

  EntityId() = default;
  explicit EntityId(std::string n) : name(std::move(n)) {}

  auto operator<=>(const EntityId&) const = default;
  bool empty() const { return name.empty(); }

  // "Marvin_Minsky" -> "Marvin Minsky"
  std::string display_name() const {
    std::string out = name;
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
  }

  // Words of the display name, case preserved.
  std::vector<std::string> name_words() const {
    std::vector<std::string> words;
    for (std::string_view w : text::split_whitespace(display_name())) words.emplace_back(w);
    return words;
  }
};

inline std::ostream& operator<<(std::ostream& os, const EntityId& e) { return os << e.name; }

struct Fact {
  EntityId subject;
  std::string relation;
  EntityId object;

  auto operator<=>(const Fact&) const = default;
};

struct RelationSchema {
  std::string relation;
  std::string subject_type;
  std::string object_type;
  std::vector<std::string> templates;
};

// A knowledge-base-completion query <subject, relation, ?>.
struct KbcQuery {
  EntityId subject;
  std::string relation;

  auto operator<=>(const KbcQuery&) const = default;
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  // Validates the parts and derives link sets. Throws DataError when a fact
  // mentions an untyped entity, a label targets an unknown entity, or a
  // schema is inconsistent with the type store.
  static KnowledgeBase from_parts(std::vector<Fact> facts,
                                  std::vector<std::pair<EntityId, std::string>> types,
                                  std::vector<std::pair<std::string, EntityId>> labels,
                                  std::vector<RelationSchema> schemas) {
    KnowledgeBase kb;
    for (auto& [entity, type] : types) {
      if (entity.empty() || type.empty()) throw DataError("empty entity or type name");
      kb.types_[entity].insert(std::move(type));
    }
    std::set<std::string> missing;
    for (auto& fact : facts) {
      if (fact.subject.empty() || fact.relation.empty() || fact.object.empty()) {
        throw DataError("fact with an empty field");
      }
      if (!kb.types_.contains(fact.subject)) missing.insert(fact.subject.name);
      if (!kb.types_.contains(fact.object)) missing.insert(fact.object.name);
      kb.facts_.insert(std::move(fact));
    }
    if (!missing.empty()) {
      std::string msg = "entities in facts without types:";
      for (const auto& m : missing) msg += " " + m;
      throw DataError(msg);
    }

    std::set<std::string> known_types;
    for (const auto& [entity, ts] : kb.types_) known_types.insert(ts.begin(), ts.end());
    for (auto& schema : schemas) {
      if (schema.templates.empty()) {
        throw DataError("schema for " + schema.relation + " lists no templates");
      }
      if (!known_types.contains(schema.object_type)) {
        throw DataError("schema for " + schema.relation + " names unknown object type '" +
                        schema.object_type + "'");
      }
      std::string rel = schema.relation;
      if (!kb.schemas_.emplace(rel, std::move(schema)).second) {
        throw DataError("duplicate schema for relation " + rel);
      }
    }

    for (const auto& [entity, ts] : kb.types_) {
      kb.labels_[text::fold_case(entity.display_name())].insert(entity);
    }
    for (auto& [surface, entity] : labels) {
      if (!kb.types_.contains(entity)) {
        throw DataError("label '" + surface + "' refers to unknown entity " + entity.name);
      }
      const std::string key = text::fold_case(text::collapse_whitespace(surface));
      if (key.empty()) throw DataError("empty label for entity " + entity.name);
      kb.labels_[key].insert(std::move(entity));
    }

    for (const auto& fact : kb.facts_) {
      ++kb.fact_counts_[fact.subject];
      if (fact.object != fact.subject) ++kb.fact_counts_[fact.object];
      if (fact.subject != fact.object) {
        kb.link_sets_[fact.subject].insert(fact.object);
        kb.link_sets_[fact.object].insert(fact.subject);
      }
      kb.by_subject_relation_[{fact.subject, fact.relation}].insert(fact.object);
    }
    return kb;
  }

  const std::set<Fact>& facts() const { return facts_; }
  std::size_t entity_count() const { return types_.size(); }
  bool contains(const EntityId& e) const { return types_.contains(e); }

  const std::set<std::string>& entity_types(const EntityId& e) const {
    auto it = types_.find(e);
    return it == types_.end() ? empty_types() : it->second;
  }

  const std::map<EntityId, std::set<std::string>>& types() const { return types_; }

  // Lowercase surface form -> entities.
  const std::map<std::string, std::set<EntityId>>& labels() const { return labels_; }

  const std::set<EntityId>& link_set(const EntityId& e) const {
    auto it = link_sets_.find(e);
    return it == link_sets_.end() ? empty_entities() : it->second;
  }

  // Number of facts in which e is subject or object.
  std::size_t fact_count(const EntityId& e) const {
    auto it = fact_counts_.find(e);
    return it == fact_counts_.end() ? 0 : it->second;
  }

  bool has_schema(const std::string& relation) const { return schemas_.contains(relation); }

  const RelationSchema& schema(const std::string& relation) const {
    auto it = schemas_.find(relation);
    if (it == schemas_.end()) throw UsageError("unknown relation: " + relation);
    return it->second;
  }

  const std::map<std::string, RelationSchema>& schemas() const { return schemas_; }

  // Objects o with (subject, relation, o) in the KB. Under the local
  // closed-world assumption this is the complete ground truth.
  std::set<EntityId> closed_world_objects(const EntityId& subject,
                                          const std::string& relation) const {
    schema(relation);
    auto it = by_subject_relation_.find({subject, relation});
    return it == by_subject_relation_.end() ? std::set<EntityId>{} : it->second;
  }

  // Distinct subjects with at least one object for the relation, sorted.
  std::vector<EntityId> subjects_with_objects(const std::string& relation) const {
    schema(relation);
    std::vector<EntityId> out;
    for (const auto& [key, objects] : by_subject_relation_) {
      if (key.second == relation && !objects.empty()) out.push_back(key.first);
    }
    return out;
  }

 private:
  static const std::set<std::string>& empty_types() {
    static const std::set<std::string> empty;
    return empty;
  }
  static const std::set<EntityId>& empty_entities() {
    static const std::set<EntityId> empty;
    return empty;
  }

  std::set<Fact> facts_;
  std::map<EntityId, std::set<std::string>> types_;
  std::map<std::string, std::set<EntityId>> labels_;
  std::map<std::string, RelationSchema> schemas_;
  std::map<EntityId, std::set<EntityId>> link_sets_;
  std::map<EntityId, std::size_t> fact_counts_;
  std::map<std::pair<EntityId, std::string>, std::set<EntityId>> by_subject_relation_;
};

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.emplace_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

// Calls fn(fields, line_number) for every data row; enforces the arity.
inline void read_tsv(const std::filesystem::path& path, std::size_t arity,
                     const std::function<void(std::vector<std::string>&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    const bool blank_field =
        std::any_of(fields.begin(), fields.end(), [](const std::string& f) { return f.empty(); });
    if (fields.size() != arity || blank_field) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << arity
          << " non-empty tab-separated fields, got " << fields.size();
      throw DataError(msg.str());
    }
    fn(fields, line_no);
  }
}

}  // namespace detail

struct KbPaths {
  std::filesystem::path facts;
  std::filesystem::path types;
  std::filesystem::path labels;
  std::filesystem::path schemas;
};

inline KnowledgeBase load_kb(const KbPaths& paths) {
  std::vector<Fact> facts;
  detail::read_tsv(paths.facts, 3, [&](std::vector<std::string>& f, std::size_t) {
    facts.push_back({EntityId(std::move(f[0])), std::move(f[1]), EntityId(std::move(f[2]))});
  });
  std::vector<std::pair<EntityId, std::string>> types;
  detail::read_tsv(paths.types, 2, [&](std::vector<std::string>& f, std::size_t) {
    types.emplace_back(EntityId(std::move(f[0])), std::move(f[1]));
  });
  std::vector<std::pair<std::string, EntityId>> labels;
  detail::read_tsv(paths.labels, 2, [&](std::vector<std::string>& f, std::size_t) {
    labels.emplace_back(std::move(f[0]), EntityId(std::move(f[1])));
  });
  std::vector<RelationSchema> schemas;
  detail::read_tsv(paths.schemas, 4, [&](std::vector<std::string>& f, std::size_t line_no) {
    RelationSchema s{std::move(f[0]), std::move(f[1]), std::move(f[2]), {}};
    std::stringstream ss(f[3]);
    std::string t;
    while (std::getline(ss, t, ',')) {
      t = text::collapse_whitespace(t);
      if (t.empty() || t.find(' ') != std::string::npos) {
        throw DataError(paths.schemas.string() + ":" + std::to_string(line_no) +
                        ": templates must be single non-empty words");
      }
      s.templates.push_back(t);
    }
    schemas.push_back(std::move(s));
  });
  return KnowledgeBase::from_parts(std::move(facts), std::move(types), std::move(labels),
                                   std::move(schemas));
}

// One facts.tsv row per fact, in sorted order.
inline void write_facts_tsv(const KnowledgeBase& kb, std::ostream& out) {
  for (const auto& f : kb.facts()) {
    out << f.subject.name << '\t' << f.relation << '\t' << f.object.name << '\n';
  }
}

// Entity relatedness in [0, 1]. The default provider derives it from the
// local link sets; a remote provider can implement the same interface.
class Relatedness {
 public:
  virtual ~Relatedness() = default;
  virtual double operator()(const EntityId& a, const EntityId& b) const = 0;
};

// Jaccard overlap |L(a) & L(b)| / |L(a) | L(b)| of fact-neighbour sets.
class LinkOverlapRelatedness final : public Relatedness {
 public:
  explicit LinkOverlapRelatedness(const KnowledgeBase& kb) : kb_(&kb) {}

  double operator()(const EntityId& a, const EntityId& b) const override {
    if (a == b) return 1.0;
    if (!kb_->contains(a) || !kb_->contains(b)) return 0.0;
    const auto& la = kb_->link_set(a);
    const auto& lb = kb_->link_set(b);
    std::size_t shared = 0;
    auto ia = la.begin();
    auto ib = lb.begin();
    while (ia != la.end() && ib != lb.end()) {
      if (*ia < *ib) {
        ++ia;
      } else if (*ib < *ia) {
        ++ib;
      } else {
        ++shared;
        ++ia;
        ++ib;
      }
    }
    const std::size_t united = la.size() + lb.size() - shared;
    return united == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(united);
  }

 private:
  const KnowledgeBase* kb_;
};

inline double relatedness(const KnowledgeBase& kb, const EntityId& a, const EntityId& b) {
  return LinkOverlapRelatedness(kb)(a, b);
}

struct QuerySplit {
  std::vector<KbcQuery> train;
  std::vector<KbcQuery> test;
};

// Random disjoint train/test subjects for a relation. Only subjects with a
// non-empty ground truth are eligible.
inline QuerySplit sample_queries(const KnowledgeBase& kb, const std::string& relation,
                                 std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  std::vector<EntityId> subjects = kb.subjects_with_objects(relation);
  if (subjects.size() < n_train + n_test) {
    throw DataError("relation " + relation + " has " + std::to_string(subjects.size()) +
                    " subjects with ground truth, " + std::to_string(n_train + n_test) +
                    " requested");
  }
  Rng rng(seed);
  rng.shuffle(std::span<EntityId>(subjects));
  QuerySplit split;
  for (std::size_t i = 0; i < n_train + n_test; ++i) {
    auto& bucket = i < n_train ? split.train : split.test;
    bucket.push_back({subjects[i], relation});
  }
  return split;
}

}  // namespace webqa
