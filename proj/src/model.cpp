#include "cohlog/model.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace cohlog {

int FiniteModel::carrierSize(const std::string& sort) const {
  auto it = carriers.find(sort);
  return it == carriers.end() ? 0 : static_cast<int>(it->second.size());
}

int FiniteModel::elementIndex(const std::string& sort, const std::string& elem) const {
  auto it = carriers.find(sort);
  if (it == carriers.end()) return -1;
  for (size_t i = 0; i < it->second.size(); ++i)
    if (it->second[i] == elem) return static_cast<int>(i);
  return -1;
}

void FiniteModel::validate(const Signature& sig) const {
  for (const auto& s : sig.sorts)
    if (!carriers.count(s))
      throw InputError("model has no carrier for sort '" + s + "'");
  for (const auto& r : sig.relations) {
    auto it = relations.find(r.name);
    if (it == relations.end())
      throw InputError("model has no table for relation '" + r.name + "'");
    for (const auto& tuple : it->second) {
      if (tuple.size() != r.domain.size())
        throw InputError("relation " + r.name + " tuple arity mismatch");
      for (size_t i = 0; i < tuple.size(); ++i)
        if (tuple[i] < 0 || tuple[i] >= carrierSize(r.domain[i]))
          throw InputError("relation " + r.name + " tuple out of range");
    }
  }
  for (const auto& f : sig.functions) {
    auto it = functions.find(f.name);
    if (it == functions.end())
      throw InputError("model has no table for function '" + f.name + "'");
    // Totality over the domain product.
    std::uint64_t expect = 1;
    for (const auto& d : f.domain)
      expect *= static_cast<std::uint64_t>(carrierSize(d));
    if (it->second.size() != expect)
      throw InputError("function " + f.name + " table is not total (" +
                       std::to_string(it->second.size()) + " of " +
                       std::to_string(expect) + " entries)");
    for (const auto& [tuple, val] : it->second) {
      if (tuple.size() != f.domain.size())
        throw InputError("function " + f.name + " tuple arity mismatch");
      for (size_t i = 0; i < tuple.size(); ++i)
        if (tuple[i] < 0 || tuple[i] >= carrierSize(f.domain[i]))
          throw InputError("function " + f.name + " tuple out of range");
      if (val < 0 || val >= carrierSize(f.codomain))
        throw InputError("function " + f.name + " value out of range");
    }
  }
}

std::string FiniteModel::print(const Signature& sig) const {
  std::ostringstream out;
  out << "model " << (name.empty() ? std::string("M") : name) << " {\n";
  for (const auto& s : sig.sorts) {
    out << "  sort " << s << " = {";
    const auto& elems = carriers.at(s);
    for (size_t i = 0; i < elems.size(); ++i) out << (i ? ", " : " ") << elems[i];
    out << (elems.empty() ? "}" : " }") << "\n";
  }
  for (const auto& r : sig.relations) {
    out << "  rel " << r.name << " = ";
    const auto& table = relations.at(r.name);
    if (r.domain.empty()) {
      out << (table.count(std::vector<int>{}) ? "true" : "false") << "\n";
      continue;
    }
    out << "{";
    bool first = true;
    for (const auto& tuple : table) {
      out << (first ? " " : ", ") << "(";
      for (size_t i = 0; i < tuple.size(); ++i)
        out << (i ? ", " : "") << carriers.at(r.domain[i])[tuple[i]];
      out << ")";
      first = false;
    }
    out << (first ? "}" : " }") << "\n";
  }
  for (const auto& f : sig.functions) {
    out << "  fun " << f.name << " = ";
    const auto& table = functions.at(f.name);
    if (f.domain.empty()) {
      out << carriers.at(f.codomain)[table.at({})] << "\n";
      continue;
    }
    out << "{";
    bool first = true;
    for (const auto& [tuple, val] : table) {
      out << (first ? " " : ", ") << "(";
      for (size_t i = 0; i < tuple.size(); ++i)
        out << (i ? ", " : "") << carriers.at(f.domain[i])[tuple[i]];
      out << ") -> " << carriers.at(f.codomain)[val];
      first = false;
    }
    out << (first ? "}" : " }") << "\n";
  }
  out << "}\n";
  return out.str();
}

std::string FiniteModel::key() const {
  std::ostringstream out;
  for (const auto& [s, elems] : carriers) out << s << ":" << elems.size() << ";";
  for (const auto& [r, table] : relations) {
    out << r << "{";
    for (const auto& tuple : table) {
      for (int v : tuple) out << v << ",";
      out << "|";
    }
    out << "}";
  }
  for (const auto& [f, table] : functions) {
    out << f << "{";
    for (const auto& [tuple, val] : table) {
      for (int v : tuple) out << v << ",";
      out << "->" << val << "|";
    }
    out << "}";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Evaluation

int evalTerm(const FiniteModel& m, const TermPtr& t, const Assignment& env) {
  if (t->isVar) {
    auto it = env.find(t->head);
    if (it == env.end())
      throw InputError("evaluation: unbound variable '" + t->head + "'");
    return it->second;
  }
  std::vector<int> args;
  args.reserve(t->args.size());
  for (const auto& a : t->args) args.push_back(evalTerm(m, a, env));
  auto it = m.functions.find(t->head);
  if (it == m.functions.end())
    throw InputError("evaluation: no table for function '" + t->head + "'");
  auto jt = it->second.find(args);
  if (jt == it->second.end())
    throw InputError("evaluation: function '" + t->head + "' missing a tuple");
  return jt->second;
}

bool evalFormula(const FiniteModel& m, const FormulaPtr& f, const Assignment& env) {
  switch (f->kind) {
    case FK::Top:
      return true;
    case FK::Bot:
      return false;
    case FK::Atom: {
      std::vector<int> args;
      args.reserve(f->args.size());
      for (const auto& t : f->args) args.push_back(evalTerm(m, t, env));
      auto it = m.relations.find(f->rel);
      if (it == m.relations.end())
        throw InputError("evaluation: no table for relation '" + f->rel + "'");
      return it->second.count(args) > 0;
    }
    case FK::Eq:
      return evalTerm(m, f->args[0], env) == evalTerm(m, f->args[1], env);
    case FK::And:
      return evalFormula(m, f->kids[0], env) && evalFormula(m, f->kids[1], env);
    case FK::Or:
      return evalFormula(m, f->kids[0], env) || evalFormula(m, f->kids[1], env);
    case FK::Not:
      return !evalFormula(m, f->kids[0], env);
    case FK::Exists: {
      int n = m.carrierSize(f->varSort);
      Assignment e2 = env;
      for (int i = 0; i < n; ++i) {
        e2[f->var] = i;
        if (evalFormula(m, f->kids[0], e2)) return true;
      }
      return false;
    }
    case FK::Forall: {
      int n = m.carrierSize(f->varSort);
      Assignment e2 = env;
      for (int i = 0; i < n; ++i) {
        e2[f->var] = i;
        if (!evalFormula(m, f->kids[0], e2)) return false;
      }
      return true;
    }
  }
  return false;
}

namespace {

// Iterates assignments over a context; calls visit for each. Returns false
// if visit ever returned false (early exit).
bool forEachAssignment(const FiniteModel& m, const Context& ctx,
                       const std::function<bool(const Assignment&)>& visit) {
  std::vector<int> sizes;
  for (const auto& v : ctx) sizes.push_back(m.carrierSize(v.sort));
  for (int s : sizes)
    if (s == 0) return true;  // vacuous
  std::vector<int> idx(ctx.size(), 0);
  while (true) {
    Assignment env;
    for (size_t i = 0; i < ctx.size(); ++i) env[ctx[i].name] = idx[i];
    if (!visit(env)) return false;
    size_t k = 0;
    for (; k < idx.size(); ++k) {
      if (++idx[k] < sizes[k]) break;
      idx[k] = 0;
    }
    if (k == idx.size()) return true;
    if (idx.empty()) return true;
  }
}

}  // namespace

bool holdsIn(const FiniteModel& m, const Sequent& s) {
  Context ctx = freeContext(s);
  return forEachAssignment(m, ctx, [&](const Assignment& env) {
    for (const auto& f : s.lhs)
      if (!evalFormula(m, f, env)) return true;  // antecedent fails, fine
    return evalFormula(m, s.rhs, env);
  });
}

ModelCheckResult checkModel(const FiniteModel& m, const Theory& t) {
  m.validate(t.sig);
  ModelCheckResult res;
  for (const auto& ax : t.axioms) {
    Context ctx = freeContext(ax);
    bool ok = forEachAssignment(m, ctx, [&](const Assignment& env) {
      for (const auto& f : ax.lhs)
        if (!evalFormula(m, f, env)) return true;
      if (evalFormula(m, ax.rhs, env)) return true;
      // Record the violation.
      std::ostringstream why;
      why << "at";
      for (const auto& v : ctx)
        why << " " << v.name << "=" << m.carriers.at(v.sort)[env.at(v.name)];
      if (ctx.empty()) why << " the empty assignment";
      res.violations.emplace_back(ax.label.empty() ? printSequent(ax) : ax.label,
                                  why.str());
      return false;
    });
    if (!ok) res.ok = false;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Bounded enumeration

namespace {

// Carrier size vectors in canonical order: by total, then lexicographic.
// Sizes start at 0 (empty carriers are legitimate coherent models).
std::vector<std::vector<int>> sizeVectors(int nsorts, int maxSize) {
  std::vector<std::vector<int>> all;
  std::vector<int> cur(nsorts, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == nsorts) {
      all.push_back(cur);
      return;
    }
    for (int s = 0; s <= maxSize; ++s) {
      cur[i] = s;
      rec(i + 1);
    }
  };
  if (nsorts == 0)
    all.push_back({});
  else
    rec(0);
  std::stable_sort(all.begin(), all.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     int ta = 0, tb = 0;
                     for (int x : a) ta += x;
                     for (int x : b) tb += x;
                     if (ta != tb) return ta < tb;
                     return a < b;
                   });
  return all;
}

}  // namespace

bool enumerateModels(const Theory& t, int maxSize,
                     const std::function<bool(const FiniteModel&)>& visit,
                     std::uint64_t budgetStates) {
  const Signature& sig = t.sig;
  std::uint64_t examined = 0;

  for (const auto& sizes : sizeVectors(static_cast<int>(sig.sorts.size()), maxSize)) {
    FiniteModel base;
    for (size_t i = 0; i < sig.sorts.size(); ++i) {
      std::vector<std::string> elems;
      for (int k = 0; k < sizes[i]; ++k) elems.push_back(std::to_string(k));
      base.carriers[sig.sorts[i]] = std::move(elems);
    }

    // All relation tuples and function argument tuples, in lexicographic
    // order, to be filled combinatorially.
    struct RelSlot {
      std::string rel;
      std::vector<int> tuple;
    };
    struct FunSlot {
      std::string fun;
      std::vector<int> tuple;
      int codSize;
    };
    std::vector<RelSlot> relSlots;
    std::vector<FunSlot> funSlots;
    bool degenerate = false;

    auto tuplesOf = [&](const std::vector<std::string>& domain) {
      std::vector<std::vector<int>> out;
      std::vector<int> cur(domain.size(), 0);
      std::function<void(size_t)> rec = [&](size_t i) {
        if (i == domain.size()) {
          out.push_back(cur);
          return;
        }
        int n = base.carrierSize(domain[i]);
        for (int v = 0; v < n; ++v) {
          cur[i] = v;
          rec(i + 1);
        }
      };
      bool empty = false;
      for (const auto& d : domain)
        if (base.carrierSize(d) == 0) empty = true;
      if (!empty) rec(0);
      return out;
    };

    for (const auto& r : sig.relations)
      for (auto& tuple : tuplesOf(r.domain)) relSlots.push_back({r.name, tuple});
    for (const auto& f : sig.functions) {
      int cod = base.carrierSize(f.codomain);
      auto tuples = tuplesOf(f.domain);
      if (!tuples.empty() && cod == 0) {
        // A function into an empty sort from a nonempty domain: no model.
        degenerate = true;
        break;
      }
      for (auto& tuple : tuples) funSlots.push_back({f.name, tuple, cod});
    }
    if (degenerate) continue;

    // Odometer over relation bits and function values; the per-state counter
    // below is the budget guard.
    std::vector<int> relBits(relSlots.size(), 0);
    std::vector<int> funVals(funSlots.size(), 0);
    while (true) {
      if (++examined > budgetStates) return false;
      FiniteModel m = base;
      for (const auto& r : sig.relations) m.relations[r.name];
      for (size_t i = 0; i < relSlots.size(); ++i)
        if (relBits[i]) m.relations[relSlots[i].rel].insert(relSlots[i].tuple);
      for (const auto& f : sig.functions) m.functions[f.name];
      for (size_t i = 0; i < funSlots.size(); ++i)
        m.functions[funSlots[i].fun][funSlots[i].tuple] = funVals[i];

      bool sat = true;
      for (const auto& ax : t.axioms)
        if (!holdsIn(m, ax)) {
          sat = false;
          break;
        }
      if (sat && !visit(m)) return true;

      // Advance the odometer: relation bits first, then function values.
      size_t k = 0;
      for (; k < relBits.size(); ++k) {
        if (++relBits[k] < 2) break;
        relBits[k] = 0;
      }
      if (k < relBits.size()) continue;
      size_t j = 0;
      for (; j < funVals.size(); ++j) {
        if (++funVals[j] < funSlots[j].codSize) break;
        funVals[j] = 0;
      }
      if (j == funVals.size()) break;
    }
  }
  return true;
}

std::optional<FiniteModel> findCountermodel(const Theory& t, const Sequent& s,
                                            int maxSize) {
  std::optional<FiniteModel> found;
  enumerateModels(t, maxSize, [&](const FiniteModel& m) {
    if (!holdsIn(m, s)) {
      found = m;
      found->name = "countermodel";
      return false;
    }
    return true;
  });
  return found;
}

}  // namespace cohlog
