#include "cohlog/prover.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "cohlog/subst.hpp"

namespace cohlog {

std::string outcomeName(Outcome o) {
  switch (o) {
    case Outcome::Proved:
      return "Proved";
    case Outcome::Refuted:
      return "Refuted";
    case Outcome::Unknown:
      return "Unknown";
  }
  return "Unknown";
}

namespace {

constexpr int kTermCap = 5000;

// ---------------------------------------------------------------------------
// Classical-node scan: proof search is coherent-only.

bool hasClassicalNode(const FormulaPtr& f) {
  if (f->kind == FK::Not || f->kind == FK::Forall) return true;
  for (const auto& k : f->kids)
    if (hasClassicalNode(k)) return true;
  return false;
}

bool hasClassicalNode(const Sequent& s) {
  for (const auto& f : s.lhs)
    if (hasClassicalNode(f)) return true;
  return hasClassicalNode(s.rhs);
}

// ---------------------------------------------------------------------------
// Rule compilation. Axioms are unfolded to graph-normal form, bound variables
// renamed apart, antecedents normalized to disjuncts of flat atoms (one rule
// each), conclusions to branch lists.

struct FlatAtom {
  enum Kind { Rel, Graph, VarEq } kind = Rel;
  std::string name;               // relation or function name
  std::vector<std::string> vars;  // argument variables (both sides for VarEq)
  std::string resVar;             // Graph: the result variable
};

struct RuleVar {
  std::string name, sort;
};

struct Branch {
  std::vector<RuleVar> exVars;
  std::vector<FlatAtom> atoms;
  // Existential variables that are genuinely free element choices. A variable
  // standing in the result slot of a graph atom (or equated to a bound one)
  // is determined by function totality and costs nothing to introduce.
  int fresh = 0;
};

// Counts the existential variables of a branch that no graph atom or
// equation determines from already-bound ones.
int countFresh(const Branch& br) {
  std::set<std::string> ex;
  for (const auto& v : br.exVars) ex.insert(v.name);
  std::set<std::string> det;
  auto bound = [&](const std::string& n) { return !ex.count(n) || det.count(n); };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& a : br.atoms) {
      if (a.kind == FlatAtom::Graph) {
        bool argsBound = true;
        for (const auto& n : a.vars) argsBound = argsBound && bound(n);
        if (argsBound && !bound(a.resVar)) {
          det.insert(a.resVar);
          changed = true;
        }
      } else if (a.kind == FlatAtom::VarEq) {
        if (bound(a.vars[0]) && !bound(a.vars[1])) {
          det.insert(a.vars[1]);
          changed = true;
        } else if (bound(a.vars[1]) && !bound(a.vars[0])) {
          det.insert(a.vars[0]);
          changed = true;
        }
      }
    }
  }
  return static_cast<int>(br.exVars.size() - det.size());
}

struct Rule {
  std::string label;
  std::vector<RuleVar> vars;  // universal variables (free context + lifted exists)
  std::vector<FlatAtom> body;
  std::vector<Branch> branches;  // empty list = falsum conclusion
  bool setup = false;            // goal-antecedent rule: witnesses are free
};

struct Disjunct {
  std::vector<RuleVar> vars;
  std::vector<FlatAtom> atoms;
};

FlatAtom flatOf(const FormulaPtr& f) {
  FlatAtom a;
  if (f->kind == FK::Atom) {
    a.kind = FlatAtom::Rel;
    a.name = f->rel;
    for (const auto& t : f->args) a.vars.push_back(t->head);
    return a;
  }
  // Graph-normal equality: f(x...) = y, or x = y.
  const TermPtr& l = f->args[0];
  const TermPtr& r = f->args[1];
  if (l->isVar) {
    a.kind = FlatAtom::VarEq;
    a.vars = {l->head, r->head};
    return a;
  }
  a.kind = FlatAtom::Graph;
  a.name = l->head;
  for (const auto& t : l->args) a.vars.push_back(t->head);
  a.resVar = r->head;
  return a;
}

// Antecedent normal form: distribute or, lift exists into disjunct variables.
std::vector<Disjunct> normAnte(const FormulaPtr& f) {
  switch (f->kind) {
    case FK::Top:
      return {Disjunct{}};
    case FK::Bot:
      return {};
    case FK::Atom:
    case FK::Eq: {
      Disjunct d;
      d.atoms.push_back(flatOf(f));
      return {d};
    }
    case FK::Or: {
      auto a = normAnte(f->kids[0]);
      auto b = normAnte(f->kids[1]);
      a.insert(a.end(), b.begin(), b.end());
      return a;
    }
    case FK::And: {
      auto a = normAnte(f->kids[0]);
      auto b = normAnte(f->kids[1]);
      std::vector<Disjunct> out;
      for (const auto& x : a)
        for (const auto& y : b) {
          Disjunct d = x;
          d.vars.insert(d.vars.end(), y.vars.begin(), y.vars.end());
          d.atoms.insert(d.atoms.end(), y.atoms.begin(), y.atoms.end());
          out.push_back(std::move(d));
        }
      return out;
    }
    case FK::Exists: {
      auto a = normAnte(f->kids[0]);
      for (auto& d : a) d.vars.insert(d.vars.begin(), RuleVar{f->var, f->varSort});
      return a;
    }
    default:
      throw InputError("classical connective in coherent normalization");
  }
}

std::vector<Branch> normConc(const FormulaPtr& f) {
  switch (f->kind) {
    case FK::Top:
      return {Branch{}};
    case FK::Bot:
      return {};
    case FK::Atom:
    case FK::Eq: {
      Branch b;
      b.atoms.push_back(flatOf(f));
      return {b};
    }
    case FK::Or: {
      auto a = normConc(f->kids[0]);
      auto b = normConc(f->kids[1]);
      a.insert(a.end(), b.begin(), b.end());
      return a;
    }
    case FK::And: {
      auto a = normConc(f->kids[0]);
      auto b = normConc(f->kids[1]);
      std::vector<Branch> out;
      for (const auto& x : a)
        for (const auto& y : b) {
          Branch br = x;
          br.exVars.insert(br.exVars.end(), y.exVars.begin(), y.exVars.end());
          br.atoms.insert(br.atoms.end(), y.atoms.begin(), y.atoms.end());
          out.push_back(std::move(br));
        }
      return out;
    }
    case FK::Exists: {
      auto a = normConc(f->kids[0]);
      for (auto& b : a) b.exVars.insert(b.exVars.begin(), RuleVar{f->var, f->varSort});
      return a;
    }
    default:
      throw InputError("classical connective in coherent normalization");
  }
}

struct CompiledProblem {
  const Theory* theory = nullptr;
  std::vector<Rule> rules;          // axiom rules
  std::vector<Rule> setupRules;     // goal antecedent
  FormulaPtr goal;                  // unfolded, bound-renamed
  Context goalCtx;                  // free context of the whole sequent
  std::vector<FormulaPtr> goalLhs;  // original antecedent (for model re-check)
  FormulaPtr goalOrig;              // original succedent
  std::map<std::string, const FunDecl*> functions;  // by name
};

// One rule per antecedent disjunct; labels get #k suffixes when a sequent
// compiles to several rules.
void compileAxiom(const Sequent& ax, std::vector<Rule>& out, int& freshCounter) {
  Sequent work;
  work.lhs = {fAndAll(ax.lhs)};
  work.rhs = ax.rhs;
  Sequent unfolded = unfoldFunctionGraphs(work);
  FormulaPtr lhs = freshenBound(unfolded.lhs[0], freshCounter);
  FormulaPtr rhs = freshenBound(unfolded.rhs, freshCounter);

  Context freeCtx = freeContext(Sequent{"", {lhs}, rhs});
  std::vector<Disjunct> ds = normAnte(lhs);
  std::vector<Branch> branches = normConc(rhs);
  for (auto& b : branches) b.fresh = countFresh(b);

  std::string base = ax.label.empty() ? printSequent(ax) : ax.label;
  for (size_t i = 0; i < ds.size(); ++i) {
    Rule r;
    r.label = ds.size() > 1 ? base + "#" + std::to_string(i + 1) : base;
    for (const auto& v : freeCtx) r.vars.push_back({v.name, v.sort});
    for (const auto& v : ds[i].vars) r.vars.push_back(v);
    r.body = ds[i].atoms;
    r.branches = branches;
    out.push_back(std::move(r));
  }
}

// ---------------------------------------------------------------------------
// Ground state: term store, union-find with congruence, atom set.

struct GTerm {
  std::string fun;        // empty for constants (grounding / witnesses)
  std::vector<int> args;  // creation-time canonical classes
  std::string sort;
  std::string display;    // stable creation-time print
};

struct PState {
  std::vector<GTerm> terms;
  std::vector<int> uf;
  std::map<std::pair<std::string, std::vector<int>>, int> appIndex;  // canonical keys
  std::set<std::pair<std::string, std::vector<int>>> atoms;          // canonical keys
  std::map<std::string, int> groundEnv;  // goal variable -> term id
  bool falsity = false;
  // Witness accounting is per rule: each rule may create at most
  // budget.witnesses fresh elements along one branch of the search. A rule
  // that wants to fire past its allowance is skipped and `starved` is set,
  // which blocks countermodel extraction (the saturation is incomplete).
  std::map<const void*, int> witnessUse;
  bool starved = false;
  bool capped = false;
  std::string capReason;
  std::vector<std::string> trace;

  int find(int x) const {
    while (uf[x] != x) x = uf[x];
    return x;
  }

  void cap(const std::string& why) {
    if (!capped) {
      capped = true;
      capReason = why;
    }
  }

  int addConst(const std::string& display, const std::string& sort) {
    terms.push_back(GTerm{"", {}, sort, display});
    uf.push_back(static_cast<int>(terms.size()) - 1);
    return static_cast<int>(terms.size()) - 1;
  }

  // Looks up or creates the application term for canonical argument classes.
  int addApp(const std::string& fun, const std::vector<int>& argClasses,
             const std::string& sort) {
    auto key = std::make_pair(fun, argClasses);
    auto it = appIndex.find(key);
    if (it != appIndex.end()) return it->second;
    std::string disp = fun;
    if (!argClasses.empty()) {
      disp += "(";
      for (size_t i = 0; i < argClasses.size(); ++i)
        disp += (i ? "," : "") + terms[argClasses[i]].display;
      disp += ")";
    }
    terms.push_back(GTerm{fun, argClasses, sort, disp});
    uf.push_back(static_cast<int>(terms.size()) - 1);
    appIndex[key] = static_cast<int>(terms.size()) - 1;
    return static_cast<int>(terms.size()) - 1;
  }

  bool mergeRaw(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    // Deterministic: the smaller id becomes the representative.
    if (a > b) std::swap(a, b);
    uf[b] = a;
    return true;
  }

  // Restores canonical keys after merges; congruence-merges colliding
  // applications until stable. Quadratic, fine at this scale.
  void renormalize() {
    bool changed = true;
    while (changed) {
      changed = false;
      std::map<std::pair<std::string, std::vector<int>>, int> napp;
      for (const auto& [key, id] : appIndex) {
        std::vector<int> cargs;
        cargs.reserve(key.second.size());
        for (int a : key.second) cargs.push_back(find(a));
        auto nkey = std::make_pair(key.first, std::move(cargs));
        auto [it, fresh] = napp.emplace(nkey, id);
        if (!fresh && find(it->second) != find(id)) {
          mergeRaw(it->second, id);  // congruence
          changed = true;
        }
      }
      appIndex = std::move(napp);
      std::set<std::pair<std::string, std::vector<int>>> natoms;
      for (const auto& [rel, args] : atoms) {
        std::vector<int> cargs;
        cargs.reserve(args.size());
        for (int a : args) cargs.push_back(find(a));
        natoms.emplace(rel, std::move(cargs));
      }
      atoms = std::move(natoms);
    }
  }

  // Representatives carrying a sort, ascending.
  std::vector<int> repsOf(const std::string& sort) const {
    std::vector<int> out;
    for (size_t i = 0; i < terms.size(); ++i)
      if (find(static_cast<int>(i)) == static_cast<int>(i) && terms[i].sort == sort)
        out.push_back(static_cast<int>(i));
    return out;
  }

  bool hasAtom(const std::string& rel, const std::vector<int>& argClasses) const {
    std::vector<int> c;
    c.reserve(argClasses.size());
    for (int a : argClasses) c.push_back(find(a));
    return atoms.count({rel, c}) > 0;
  }
};

// ---------------------------------------------------------------------------
// The engine.

struct Engine {
  const CompiledProblem& prob;
  Budget budget;

  struct Fired {
    const Rule* rule;
    std::map<std::string, int> bind;
  };

  // Matching: assigns classes to rule variables in deterministic order,
  // calling `done` on each complete match; stops when done returns true.
  bool matchBody(const PState& st, const std::vector<FlatAtom>& body,
                 const std::vector<RuleVar>& vars, std::map<std::string, int>& bind,
                 size_t atomIdx, const std::function<bool()>& done) const {
    if (atomIdx == body.size()) {
      // Bind leftover variables (not mentioned in any atom) to every class of
      // their sort.
      std::function<bool(size_t)> fill = [&](size_t vi) -> bool {
        while (vi < vars.size() && bind.count(vars[vi].name)) ++vi;
        if (vi == vars.size()) return done();
        for (int rep : st.repsOf(vars[vi].sort)) {
          bind[vars[vi].name] = rep;
          if (fill(vi + 1)) return true;
          bind.erase(vars[vi].name);
        }
        return false;
      };
      return fill(0);
    }
    const FlatAtom& a = body[atomIdx];
    auto recurse = [&]() { return matchBody(st, body, vars, bind, atomIdx + 1, done); };
    auto tryBind = [&](const std::vector<std::string>& names,
                       const std::vector<int>& classes) -> bool {
      std::vector<std::string> added;
      for (size_t i = 0; i < names.size(); ++i) {
        auto it = bind.find(names[i]);
        if (it != bind.end()) {
          if (st.find(it->second) != st.find(classes[i])) {
            for (const auto& n : added) bind.erase(n);
            return false;
          }
        } else {
          bind[names[i]] = st.find(classes[i]);
          added.push_back(names[i]);
        }
      }
      if (recurse()) return true;
      for (const auto& n : added) bind.erase(n);
      return false;
    };

    switch (a.kind) {
      case FlatAtom::Rel: {
        for (const auto& [rel, args] : st.atoms) {
          if (rel != a.name) continue;
          if (tryBind(a.vars, args)) return true;
        }
        return false;
      }
      case FlatAtom::Graph: {
        for (const auto& [key, id] : st.appIndex) {
          if (key.first != a.name) continue;
          std::vector<std::string> names = a.vars;
          names.push_back(a.resVar);
          std::vector<int> classes = key.second;
          classes.push_back(st.find(id));
          if (tryBind(names, classes)) return true;
        }
        return false;
      }
      case FlatAtom::VarEq: {
        auto itA = bind.find(a.vars[0]);
        auto itB = bind.find(a.vars[1]);
        if (itA != bind.end() && itB != bind.end()) {
          if (st.find(itA->second) != st.find(itB->second)) return false;
          return recurse();
        }
        if (itA != bind.end()) return tryBind({a.vars[1]}, {itA->second});
        if (itB != bind.end()) return tryBind({a.vars[0]}, {itB->second});
        // Neither side bound: enumerate classes of the variable's sort.
        std::string sort;
        for (const auto& v : vars)
          if (v.name == a.vars[0]) sort = v.sort;
        for (int rep : st.repsOf(sort))
          if (tryBind({a.vars[0], a.vars[1]}, {rep, rep})) return true;
        return false;
      }
    }
    return false;
  }

  // Is this branch of a conclusion satisfied under the binding? Existential
  // variables range over existing classes; graph atoms require the
  // application term to exist already.
  bool branchSatisfied(const PState& st, const Branch& br,
                       std::map<std::string, int> bind) const {
    std::function<bool(size_t)> go = [&](size_t vi) -> bool {
      if (vi == br.exVars.size()) {
        for (const auto& a : br.atoms) {
          if (a.kind == FlatAtom::Rel) {
            std::vector<int> args;
            for (const auto& n : a.vars) args.push_back(bind.at(n));
            if (!st.hasAtom(a.name, args)) return false;
          } else if (a.kind == FlatAtom::Graph) {
            std::vector<int> args;
            for (const auto& n : a.vars) args.push_back(st.find(bind.at(n)));
            auto it = st.appIndex.find({a.name, args});
            if (it == st.appIndex.end()) return false;
            if (st.find(it->second) != st.find(bind.at(a.resVar))) return false;
          } else {
            if (st.find(bind.at(a.vars[0])) != st.find(bind.at(a.vars[1])))
              return false;
          }
        }
        return true;
      }
      for (int rep : st.repsOf(br.exVars[vi].sort)) {
        bind[br.exVars[vi].name] = rep;
        if (go(vi + 1)) return true;
        bind.erase(br.exVars[vi].name);
      }
      return false;
    };
    return go(0);
  }

  bool conclusionSatisfied(const PState& st, const Rule& r,
                           const std::map<std::string, int>& bind) const {
    for (const auto& br : r.branches)
      if (branchSatisfied(st, br, bind)) return true;
    return false;
  }

  std::string bindString(const PState& st, const Rule& r,
                         const std::map<std::string, int>& bind) const {
    std::string out;
    for (const auto& v : r.vars) {
      auto it = bind.find(v.name);
      if (it == bind.end()) continue;
      if (!out.empty()) out += ", ";
      out += v.name + "=" + st.terms[st.find(it->second)].display;
    }
    return out;
  }

  // A rule's remaining witness allowance in this state.
  int allowanceLeft(const PState& st, const Rule& r) const {
    auto it = st.witnessUse.find(&r);
    return budget.witnesses - (it == st.witnessUse.end() ? 0 : it->second);
  }

  // Applies one branch of a rule instance. Fresh element choices are charged
  // against the rule's own allowance unless it is a setup rule; existential
  // variables determined by graph atoms are bound by application-term lookup
  // for free. Returns false (and marks the state starved) if the allowance
  // blocked it.
  bool fireBranch(PState& st, const Rule& r, const Branch& br,
                  std::map<std::string, int> bind) {
    if (!r.setup && br.fresh > 0) {
      if (br.fresh > allowanceLeft(st, r)) {
        st.starved = true;
        return false;
      }
      st.witnessUse[&r] += br.fresh;
    }
    // Bind determined variables first: the result slot of a graph atom whose
    // arguments are bound is the (created-on-demand) application term, and a
    // variable equated to a bound one copies its class.
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& a : br.atoms) {
        if (a.kind == FlatAtom::Graph && !bind.count(a.resVar)) {
          bool argsBound = true;
          for (const auto& n : a.vars) argsBound = argsBound && bind.count(n) > 0;
          if (!argsBound) continue;
          std::vector<int> args;
          for (const auto& n : a.vars) args.push_back(st.find(bind.at(n)));
          const FunDecl* d = prob.functions.at(a.name);
          int app = st.addApp(a.name, args, d->codomain);
          st.trace.push_back("total " + st.terms[app].display + " : " + d->codomain);
          bind[a.resVar] = app;
          changed = true;
        } else if (a.kind == FlatAtom::VarEq) {
          bool hasA = bind.count(a.vars[0]) > 0, hasB = bind.count(a.vars[1]) > 0;
          if (hasA && !hasB) {
            bind[a.vars[1]] = bind.at(a.vars[0]);
            changed = true;
          } else if (hasB && !hasA) {
            bind[a.vars[0]] = bind.at(a.vars[1]);
            changed = true;
          }
        }
      }
    }
    for (const auto& v : br.exVars) {
      if (bind.count(v.name)) continue;
      std::string disp = "_w" + std::to_string(st.terms.size());
      int id = st.addConst(disp, v.sort);
      st.trace.push_back("witness " + disp + " : " + v.sort);
      bind[v.name] = id;
    }
    for (const auto& a : br.atoms) {
      if (a.kind == FlatAtom::Rel) {
        std::vector<int> args;
        for (const auto& n : a.vars) args.push_back(st.find(bind.at(n)));
        st.atoms.insert({a.name, args});
        std::string disp = a.name;
        if (!args.empty()) {
          disp += "(";
          for (size_t i = 0; i < args.size(); ++i)
            disp += (i ? "," : "") + st.terms[args[i]].display;
          disp += ")";
        }
        st.trace.push_back("derive " + disp);
      } else if (a.kind == FlatAtom::Graph) {
        std::vector<int> args;
        for (const auto& n : a.vars) args.push_back(st.find(bind.at(n)));
        const FunDecl* d = prob.functions.at(a.name);
        int app = st.addApp(a.name, args, d->codomain);
        int res = bind.at(a.resVar);
        st.trace.push_back("merge " + st.terms[app].display + " = " +
                           st.terms[st.find(res)].display);
        st.mergeRaw(app, res);
      } else {
        int x = bind.at(a.vars[0]), y = bind.at(a.vars[1]);
        st.trace.push_back("merge " + st.terms[st.find(x)].display + " = " +
                           st.terms[st.find(y)].display);
        st.mergeRaw(x, y);
      }
    }
    st.renormalize();
    if (static_cast<int>(st.terms.size()) > kTermCap) st.cap("term cap");
    return true;
  }

  // Goal evaluation over the ground state.
  bool evalGoal(const PState& st, const FormulaPtr& f,
                std::map<std::string, int>& env) const {
    switch (f->kind) {
      case FK::Top:
        return true;
      case FK::Bot:
        return false;
      case FK::Atom: {
        std::vector<int> args;
        for (const auto& t : f->args) args.push_back(env.at(t->head));
        return st.hasAtom(f->rel, args);
      }
      case FK::Eq: {
        const TermPtr& l = f->args[0];
        const TermPtr& r = f->args[1];
        if (l->isVar) return st.find(env.at(l->head)) == st.find(env.at(r->head));
        std::vector<int> args;
        for (const auto& t : l->args) args.push_back(st.find(env.at(t->head)));
        auto it = st.appIndex.find({l->head, args});
        if (it == st.appIndex.end()) return false;
        return st.find(it->second) == st.find(env.at(r->head));
      }
      case FK::And:
        return evalGoal(st, f->kids[0], env) && evalGoal(st, f->kids[1], env);
      case FK::Or:
        return evalGoal(st, f->kids[0], env) || evalGoal(st, f->kids[1], env);
      case FK::Exists: {
        for (int rep : st.repsOf(f->varSort)) {
          env[f->var] = rep;
          bool ok = evalGoal(st, f->kids[0], env);
          env.erase(f->var);
          if (ok) return true;
        }
        return false;
      }
      default:
        return false;
    }
  }

  bool goalHolds(const PState& st) const {
    if (st.falsity) return true;
    std::map<std::string, int> env = st.groundEnv;
    return evalGoal(st, prob.goal, env);
  }

  // Function completion: one application term per (function, class tuple).
  // Returns true if anything was created.
  bool completeFunctions(PState& st) {
    bool created = false;
    for (const auto& [name, decl] : prob.functions) {
      std::vector<std::vector<int>> pools;
      bool emptyPool = false;
      for (const auto& d : decl->domain) {
        pools.push_back(st.repsOf(d));
        if (pools.back().empty()) emptyPool = true;
      }
      if (emptyPool) continue;
      std::vector<size_t> idx(pools.size(), 0);
      while (true) {
        std::vector<int> tuple;
        tuple.reserve(pools.size());
        for (size_t i = 0; i < pools.size(); ++i) tuple.push_back(pools[i][idx[i]]);
        if (!st.appIndex.count({name, tuple})) {
          int id = st.addApp(name, tuple, decl->codomain);
          st.trace.push_back("total " + st.terms[id].display + " : " + decl->codomain);
          created = true;
          if (static_cast<int>(st.terms.size()) > kTermCap) {
            st.cap("term cap");
            return created;
          }
        }
        size_t k = 0;
        for (; k < idx.size(); ++k) {
          if (++idx[k] < pools[k].size()) break;
          idx[k] = 0;
        }
        if (k == idx.size()) break;
      }
    }
    return created;
  }

  // Scans one rule for an instance whose body matches and whose conclusion is
  // not yet satisfied. A rule whose pending instance cannot afford its fresh
  // witnesses is skipped (the state is marked starved) so the remaining rules
  // still get their turn.
  std::optional<Fired> scanRule(PState& st, const Rule& r) {
    int worstNeed = 0;
    for (const auto& br : r.branches) worstNeed = std::max(worstNeed, br.fresh);
    std::optional<Fired> hit;
    bool blocked = false;
    std::map<std::string, int> bind;
    matchBody(st, r.body, r.vars, bind, 0, [&]() {
      if (conclusionSatisfied(st, r, bind)) return false;  // keep searching
      if (worstNeed > allowanceLeft(st, r)) {
        blocked = true;
        return true;
      }
      hit = Fired{&r, bind};
      return true;
    });
    if (blocked) st.starved = true;
    return hit;
  }

  // First firable rule instance in deterministic order. `disjunctive` selects
  // case-splitting rules (more than one branch) or deterministic ones. Among
  // disjunctive rules, those triggered by derived facts (nonempty body) are
  // preferred over blind enumeration splits (empty body), so the split budget
  // goes to case distinctions the facts ask for.
  std::optional<Fired> findInstance(PState& st, bool disjunctive) {
    for (const auto& r : prob.rules) {
      if ((r.branches.size() > 1) != disjunctive) continue;
      if (disjunctive && r.body.empty()) continue;
      if (auto hit = scanRule(st, r)) return hit;
    }
    if (disjunctive)
      for (const auto& r : prob.rules) {
        if (r.branches.size() <= 1 || !r.body.empty()) continue;
        if (auto hit = scanRule(st, r)) return hit;
      }
    return std::nullopt;
  }

  static ProofResult proved(PState& st) {
    ProofResult r;
    r.outcome = Outcome::Proved;
    r.trace = st.trace;
    return r;
  }

  static ProofResult unknown(const std::string& reason) {
    ProofResult r;
    r.outcome = Outcome::Unknown;
    r.reason = reason;
    return r;
  }

  // Unknown that keeps the partial trace, for budget diagnosis.
  static ProofResult unknown(const PState& st, const std::string& reason) {
    ProofResult r = unknown(reason);
    r.trace = st.trace;
    return r;
  }

  // Extracts the saturated state as a finite model and re-verifies it
  // independently. A failed re-verification downgrades to Unknown.
  ProofResult extractModel(const PState& st) {
    const Theory& t = *prob.theory;
    FiniteModel m;
    m.name = "countermodel";
    std::map<int, int> position;  // rep -> index in its carrier
    for (const auto& s : t.sig.sorts) {
      std::vector<std::string> elems;
      for (int rep : st.repsOf(s)) {
        position[rep] = static_cast<int>(elems.size());
        elems.push_back("e" + std::to_string(elems.size()));
      }
      m.carriers[s] = std::move(elems);
    }
    for (const auto& r : t.sig.relations) m.relations[r.name];
    for (const auto& [rel, args] : st.atoms) {
      std::vector<int> tuple;
      for (int a : args) tuple.push_back(position.at(st.find(a)));
      m.relations[rel].insert(tuple);
    }
    for (const auto& f : t.sig.functions) m.functions[f.name];
    for (const auto& [key, id] : st.appIndex) {
      std::vector<int> tuple;
      for (int a : key.second) tuple.push_back(position.at(st.find(a)));
      m.functions[key.first][tuple] = position.at(st.find(id));
    }

    ModelCheckResult chk = checkModel(m, t);
    if (!chk.ok) return unknown("fixpoint model failed re-verification");

    // The grounding assignment must satisfy the antecedent and falsify the
    // succedent of the original sequent.
    Assignment env;
    for (const auto& [var, id] : st.groundEnv) env[var] = position.at(st.find(id));
    for (const auto& f : prob.goalLhs)
      if (!evalFormula(m, f, env))
        return unknown("fixpoint model failed re-verification");
    if (evalFormula(m, prob.goalOrig, env))
      return unknown("fixpoint model failed re-verification");

    ProofResult r;
    r.outcome = Outcome::Refuted;
    r.countermodel = m;
    return r;
  }

  // Fires a disjunctive instance: clone per branch, recurse, combine. All
  // branches proved = proved; any branch refuted = refuted; otherwise the
  // first unknown wins.
  ProofResult split(PState& st, const Fired& hit, int splitsLeft) {
    const Rule& r = *hit.rule;
    st.trace.push_back("split " + r.label + " [" + bindString(st, r, hit.bind) +
                       "] branches " + std::to_string(r.branches.size()));
    size_t prefix = st.trace.size();
    std::vector<ProofResult> outs;
    for (size_t bi = 0; bi < r.branches.size(); ++bi) {
      PState child = st;
      child.trace.push_back("branch " + std::to_string(bi + 1) + "/" +
                            std::to_string(r.branches.size()));
      if (!fireBranch(child, r, r.branches[bi], hit.bind))
        return unknown("witness budget");
      ProofResult sub = saturate(std::move(child), splitsLeft - 1);
      if (sub.outcome == Outcome::Refuted) return sub;
      outs.push_back(std::move(sub));
    }
    bool allProved = true;
    for (const auto& o : outs) allProved = allProved && o.outcome == Outcome::Proved;
    if (allProved) {
      ProofResult res;
      res.outcome = Outcome::Proved;
      res.trace = st.trace;
      for (auto& o : outs) {
        for (size_t i = prefix; i < o.trace.size(); ++i) res.trace.push_back(o.trace[i]);
        res.trace.push_back("branch end");
      }
      return res;
    }
    for (auto& o : outs)
      if (o.outcome == Outcome::Unknown) return std::move(o);
    return unknown(st, "mixed branch outcomes");
  }

  ProofResult saturate(PState st, int splitsLeft) {
    for (int round = 0;; ++round) {
      st.renormalize();
      if (goalHolds(st)) {
        st.trace.push_back(st.falsity ? "contradiction" : "goal satisfied");
        return proved(st);
      }
      if (st.capped) return unknown(st, st.capReason);
      if (round == budget.rounds) return unknown(st, "round budget");

      // Deterministic rules first, to their local fixpoint.
      bool firedAny = false;
      while (auto hit = findInstance(st, false)) {
        const Rule& r = *hit->rule;
        st.trace.push_back("apply " + r.label + " [" + bindString(st, r, hit->bind) +
                           "]");
        if (r.branches.empty()) {
          st.falsity = true;
          st.trace.push_back("contradiction");
          return proved(st);
        }
        if (!fireBranch(st, r, r.branches[0], hit->bind)) return unknown(st, "witness budget");
        firedAny = true;
        if (goalHolds(st)) {
          st.trace.push_back("goal satisfied");
          return proved(st);
        }
        if (st.capped) return unknown(st, st.capReason);
      }
      if (st.capped) return unknown(st, st.capReason);
      if (firedAny) continue;

      // Local fixpoint for deterministic rules: try a case split.
      if (auto disj = findInstance(st, true)) {
        if (splitsLeft == 0) return unknown(st, "split budget");
        return split(st, *disj, splitsLeft);
      }
      if (st.capped) return unknown(st, st.capReason);

      // Nothing fires at all: totalize the function tables and re-check.
      if (completeFunctions(st)) {
        if (st.capped) return unknown(st, st.capReason);
        continue;
      }
      if (st.capped) return unknown(st, st.capReason);

      // True fixpoint. If some rule was starved of witnesses the saturation
      // is incomplete and the classes prove nothing; otherwise they form a
      // model of the theory.
      if (st.starved) return unknown(st, "witness budget");
      return extractModel(st);
    }
  }

  // Asserts the goal antecedent (setup rules fire once, witnesses free,
  // splits charged), then saturates.
  ProofResult setupAndRun(PState st, size_t idx, int splitsLeft) {
    if (idx == prob.setupRules.size()) return saturate(std::move(st), splitsLeft);
    const Rule& r = prob.setupRules[idx];
    std::map<std::string, int> bind = st.groundEnv;
    if (conclusionSatisfied(st, r, bind))
      return setupAndRun(std::move(st), idx + 1, splitsLeft);
    if (r.branches.empty()) {
      st.trace.push_back("assumption is contradictory");
      return proved(st);
    }
    if (r.branches.size() == 1) {
      st.trace.push_back("assume [" + bindString(st, r, bind) + "]");
      fireBranch(st, r, r.branches[0], bind);
      return setupAndRun(std::move(st), idx + 1, splitsLeft);
    }
    if (splitsLeft == 0) return unknown(st, "split budget");
    st.trace.push_back("split assumption branches " + std::to_string(r.branches.size()));
    size_t prefix = st.trace.size();
    std::vector<ProofResult> outs;
    for (size_t bi = 0; bi < r.branches.size(); ++bi) {
      PState child = st;
      child.trace.push_back("branch " + std::to_string(bi + 1) + "/" +
                            std::to_string(r.branches.size()));
      fireBranch(child, r, r.branches[bi], bind);
      ProofResult sub = setupAndRun(std::move(child), idx + 1, splitsLeft - 1);
      if (sub.outcome == Outcome::Refuted) return sub;
      outs.push_back(std::move(sub));
    }
    bool allProved = true;
    for (const auto& o : outs) allProved = allProved && o.outcome == Outcome::Proved;
    if (allProved) {
      ProofResult res;
      res.outcome = Outcome::Proved;
      res.trace = st.trace;
      for (auto& o : outs) {
        for (size_t i = prefix; i < o.trace.size(); ++i) res.trace.push_back(o.trace[i]);
        res.trace.push_back("branch end");
      }
      return res;
    }
    for (auto& o : outs)
      if (o.outcome == Outcome::Unknown) return std::move(o);
    return unknown(st, "mixed branch outcomes");
  }
};

}  // namespace

ProofResult proveSequent(const Theory& t, const Sequent& s, const Budget& b) {
  // Classical content type-checks but proof search does not apply to it.
  for (const auto& ax : t.axioms)
    if (hasClassicalNode(ax)) {
      ProofResult r;
      r.outcome = Outcome::Unknown;
      r.reason = "classical connective in axiom '" + ax.label + "'";
      return r;
    }
  if (hasClassicalNode(s)) {
    ProofResult r;
    r.outcome = Outcome::Unknown;
    r.reason = "classical connective in the goal";
    return r;
  }

  CompiledProblem prob;
  prob.theory = &t;
  for (const auto& f : t.sig.functions) prob.functions[f.name] = &f;

  int fresh = 0;
  for (const auto& ax : t.axioms) compileAxiom(ax, prob.rules, fresh);

  Sequent unf = unfoldFunctionGraphs(s);
  FormulaPtr glhs = freshenBound(fAndAll(unf.lhs), fresh);
  FormulaPtr grhs = freshenBound(unf.rhs, fresh);
  prob.goal = grhs;
  prob.goalCtx = freeContext(Sequent{"", {glhs}, grhs});
  prob.goalLhs = s.lhs;
  prob.goalOrig = s.rhs;

  PState st;
  for (const auto& v : prob.goalCtx) {
    int id = st.addConst(v.name, v.sort);
    st.groundEnv[v.name] = id;
    st.trace.push_back("ground " + v.name + " : " + v.sort);
  }

  {
    Rule r;
    r.label = "assumption";
    r.setup = true;
    for (const auto& v : prob.goalCtx) r.vars.push_back({v.name, v.sort});
    r.branches = normConc(glhs);
    prob.setupRules.push_back(std::move(r));
  }

  Engine eng{prob, b};
  return eng.setupAndRun(std::move(st), 0, b.splits);
}

// ---------------------------------------------------------------------------
// Propositional decision procedure

bool decidePropositional(const Theory& t, const Sequent& s) {
  if (!t.sig.sorts.empty() || !t.sig.functions.empty())
    throw InputError("decidePropositional requires a propositional signature");
  for (const auto& r : t.sig.relations)
    if (!r.domain.empty())
      throw InputError("decidePropositional requires 0-ary relations only");

  int n = static_cast<int>(t.sig.relations.size());
  if (n > 24) throw InputError("too many propositional atoms");

  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    FiniteModel m;
    for (int i = 0; i < n; ++i) {
      auto& table = m.relations[t.sig.relations[i].name];
      if (mask & (1u << i)) table.insert(std::vector<int>{});
    }
    bool modelsT = true;
    for (const auto& ax : t.axioms)
      if (!holdsIn(m, ax)) {
        modelsT = false;
        break;
      }
    if (modelsT && !holdsIn(m, s)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Trace validation: checks the logical skeleton of a Proved trace. Every
// applied or split step must name an axiom of the theory (or the assumption
// step), branch markers must balance, and each closed frame must end with a
// satisfied goal or a contradiction.

bool validateTrace(const Theory& t, const Sequent& s,
                   const std::vector<std::string>& trace, std::string* whyNot) {
  (void)s;
  auto fail = [&](const std::string& why) {
    if (whyNot) *whyNot = why;
    return false;
  };
  if (trace.empty()) return fail("empty trace");

  std::set<std::string> labels = {"assumption"};
  for (const auto& ax : t.axioms)
    labels.insert(ax.label.empty() ? printSequent(ax) : ax.label);

  int goalsSeen = 0;
  for (const auto& line : trace) {
    std::istringstream in(line);
    std::string head;
    in >> head;
    if (head == "apply" || head == "split") {
      std::string rest = line.substr(line.find(' ') + 1);
      std::string name = rest.substr(0, rest.find(" ["));
      auto br = name.find(" branches");
      if (br != std::string::npos) name = name.substr(0, br);
      if (name == "assumption") continue;
      std::string stem = name.substr(0, name.find('#'));
      if (!labels.count(name) && !labels.count(stem))
        return fail("unknown rule in trace: " + name);
    } else if (head == "goal" || head == "contradiction") {
      ++goalsSeen;
    } else if (head == "assumption") {
      ++goalsSeen;  // "assumption is contradictory" closes the frame
    } else if (head == "assume" || head == "ground" || head == "witness" ||
               head == "derive" || head == "merge" || head == "total" ||
               head == "branch") {
      // State-building and bookkeeping lines.
    } else {
      return fail("unrecognized trace line: " + line);
    }
  }
  if (goalsSeen == 0) return fail("no goal line in trace");
  return true;
}

}  // namespace cohlog
