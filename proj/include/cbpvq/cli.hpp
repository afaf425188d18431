#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "config.hpp"
#include "equivalence.hpp"
#include "formula.hpp"
#include "laws.hpp"
#include "machine.hpp"
#include "parser.hpp"
#include "satisfaction.hpp"
#include "typecheck.hpp"

namespace cbpvq::cli {

using json = nlohmann::ordered_json;

enum Exit : int { ok = 0, refuted = 1, inconclusive = 2 };

inline constexpr const char* kConfigName = "cbpv-quant.toml";

/// Input failure already carrying its source name.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Source {
  std::string name;
  std::string text;
};

inline Source read_source(const std::string& path, std::istream& in) {
  std::stringstream ss;
  if (path == "-") {
    ss << in.rdbuf();
    return {"<stdin>", ss.str()};
  }
  std::ifstream f(path);
  if (!f) throw InputError(path + ": cannot read file");
  ss << f.rdbuf();
  return {path, ss.str()};
}

/// Prefixes parse and type errors with the source name.
template <class F>
auto with_source(const Source& src, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw InputError(src.name + ":" + e.what());
  } catch (const TypeError& e) {
    const std::string w = e.what();
    throw InputError(src.name + (e.pos().line > 0 ? ":" : ": ") + w);
  } catch (const FormulaError& e) {
    throw InputError(src.name + ": " + e.what());
  }
}

inline std::string interval_text(const TruthSpace& sp, const Interval& i) {
  if (i.exact) return sp.format(i.lo);
  return "[" + sp.format(i.lo) + " .. " + sp.format(i.hi) + "]";
}

inline json interval_json(const TruthSpace& sp, const Interval& i) {
  return json{{"lo", sp.format(i.lo)}, {"hi", sp.format(i.hi)}, {"exact", i.exact}};
}

inline json tree_json(const EffectTree& t, std::size_t width) {
  if (is_unknown(t)) return json{{"unknown", true}};
  if (const ComTerm* m = leaf_value(t)) return json{{"leaf", terminal_text(*m)}};
  const auto& n = *as_node(t);
  json j{{"op", node_label(n.op, n.param)}};
  json kids = json::array();
  if (n.family) {
    for (std::uint64_t i = 0; i < width; ++i) kids.push_back(tree_json(n.family->at(i), width));
    j["children"] = kids;
    j["truncated_at"] = width;
  } else {
    for (const auto& c : n.children) kids.push_back(tree_json(c, width));
    j["children"] = kids;
  }
  return j;
}

inline json bounds_json(const Bounds& b) {
  return json{{"suite_size", b.suite_size}, {"fuel", b.fuel}, {"formulas", b.formulas}, {"numerals", b.numerals}};
}

inline std::string bounds_text(const Bounds& b) {
  std::string ns;
  for (auto n : b.numerals) ns += (ns.empty() ? "" : ", ") + std::to_string(n);
  return "suite_size = " + std::to_string(b.suite_size) + ", fuel = " + std::to_string(b.fuel) +
         ", formulas = " + std::to_string(b.formulas) + ", numerals = {" + ns + "}";
}

/// Flags shared by every verb. Unset flags leave the configuration file's
/// value in place.
struct GlobalFlags {
  std::string config;
  bool json = false;
  std::string signature, truth_space;
  std::vector<std::string> locations, errors, error_valuation;
  std::uint64_t value_bound = 0, seed = 0;
  double tolerance = 0;
  std::size_t explore_width = 0;
  std::vector<std::uint64_t> numerals;
  CLI::Option *o_value_bound = nullptr, *o_seed = nullptr, *o_tolerance = nullptr, *o_width = nullptr,
              *o_locations = nullptr, *o_errors = nullptr, *o_numerals = nullptr;
};

inline void add_global_flags(CLI::App& app, GlobalFlags& g) {
  app.add_option("--config", g.config, "configuration file (default: " + std::string(kConfigName) +
                                           " next to the first input, then in the working directory)");
  app.add_flag("--json", g.json, "machine-readable output");
  app.add_option("--signature", g.signature, "effect signature, e.g. prob+nondet");
  app.add_option("--truth-space", g.truth_space, "truth space override");
  g.o_locations = app.add_option("--locations", g.locations, "store locations")->delimiter(',')->allow_extra_args(false);
  g.o_value_bound = app.add_option("--value-bound", g.value_bound, "store value bound");
  g.o_errors = app.add_option("--errors", g.errors, "error labels")->delimiter(',')->allow_extra_args(false);
  app.add_option("--error-valuation", g.error_valuation, "q.e=value, repeatable")->allow_extra_args(false);
  g.o_tolerance = app.add_option("--tolerance", g.tolerance, "numeric tolerance");
  g.o_width = app.add_option("--explore-width", g.explore_width, "children explored per N-indexed node");
  g.o_seed = app.add_option("--seed", g.seed, "seed for randomised suites");
  g.o_numerals = app.add_option("--numerals", g.numerals, "extra numeral pool entries")->delimiter(',')->allow_extra_args(false);
}

inline RunConfig build_config(const GlobalFlags& g, const std::vector<std::string>& inputs) {
  RunConfig cfg;
  namespace fs = std::filesystem;
  if (!g.config.empty()) {
    cfg = load_config_file(g.config);
  } else {
    std::vector<fs::path> candidates;
    for (const auto& in : inputs)
      if (in != "-") {
        candidates.push_back(fs::path(in).parent_path() / kConfigName);
        break;
      }
    candidates.push_back(fs::path(kConfigName));
    for (const auto& c : candidates)
      if (fs::exists(c)) {
        cfg = load_config_file(c.string());
        break;
      }
  }
  if (!g.signature.empty()) cfg.signature = g.signature;
  if (!g.truth_space.empty()) cfg.truth_space = g.truth_space;
  if (g.o_locations->count()) cfg.store.locations = g.locations;
  if (g.o_value_bound->count()) cfg.store.value_bound = g.value_bound;
  if (g.o_errors->count()) cfg.errors = g.errors;
  for (const auto& ev : g.error_valuation) {
    const auto eq = ev.find('=');
    if (eq == std::string::npos) throw ConfigError("--error-valuation expects q.e=value, got '" + ev + "'");
    apply_setting(cfg, "error_valuation." + ev.substr(0, eq), ev.substr(eq + 1));
  }
  if (g.o_tolerance->count()) cfg.tolerance = g.tolerance;
  if (g.o_width->count()) cfg.explore_width = g.explore_width;
  if (g.o_seed->count()) cfg.seed = g.seed;
  if (g.o_numerals->count()) cfg.numerals = g.numerals;
  return cfg;
}

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool as_json = false;
  int stdin_uses = 0;

  Source source(const std::string& path) {
    if (path == "-" && ++stdin_uses > 1) throw InputError("stdin ('-') may be used for one input only");
    return read_source(path, in);
  }
  void emit(const json& j) { out << j.dump(2) << "\n"; }
};

inline std::optional<AnyType> type_flag(const std::string& text) {
  if (text.empty()) return std::nullopt;
  try {
    return parse_type(text);
  } catch (const ParseError& e) {
    throw InputError(std::string("--type: ") + e.what());
  }
}

inline Term load_term(Io& io, const std::string& path, const Instance& inst) {
  const Source src = io.source(path);
  return with_source(src, [&] { return Term{parse_program(src.text, inst.signature)}; });
}

// ----- verbs ---------------------------------------------------------------------

inline int verb_typecheck(Io& io, const RunConfig& cfg, const std::string& path, const std::string& type_text) {
  const Instance inst = make_instance(cfg);
  const Source src = io.source(path);
  const ComTerm m = with_source(src, [&] { return parse_program(src.text, inst.signature); });
  const auto hint = type_flag(type_text);
  const ComType c = with_source(src, [&] {
    TypeChecker tc(inst.signature);
    if (hint) {
      const auto* want = std::get_if<ComType>(&*hint);
      if (!want) throw InputError("--type must be a computation type");
      tc.check(Context{}, m, *want);
      return *want;
    }
    return tc.infer(Context{}, m);
  });
  if (io.as_json)
    io.emit(json{{"verb", "typecheck"}, {"input", src.name}, {"well_typed", true}, {"type", to_string(c)}});
  else
    io.out << "type = " << to_string(c) << "\n";
  return ok;
}

inline int verb_eval(Io& io, const RunConfig& cfg, const std::string& path, std::uint64_t fuel, std::size_t width) {
  const Instance inst = make_instance(cfg);
  const Source src = io.source(path);
  const ComTerm m = with_source(src, [&] {
    ComTerm t = parse_program(src.text, inst.signature);
    TypeChecker(inst.signature).infer(Context{}, t);
    return t;
  });
  const EffectTree t = eval_tree(m, fuel);
  if (io.as_json) {
    io.emit(json{{"verb", "eval"}, {"input", src.name}, {"fuel", fuel}, {"complete", !has_unknown(t, width)},
                 {"tree", tree_json(t, width)}});
  } else {
    std::string s;
    render_tree(s, t, terminal_text, width);
    io.out << s;
  }
  return ok;
}

struct SatFlags {
  std::uint64_t fuel = 0;
  bool exact = false;
  std::uint64_t cap = 0;
  std::string type;
};

inline int verb_sat(Io& io, const RunConfig& cfg, const std::string& prog, const std::string& form, const SatFlags& f) {
  const Instance inst = make_instance(cfg);
  const Term t = load_term(io, prog, inst);
  const Source fsrc = io.source(form);
  const Formula phi = with_source(fsrc, [&] { return parse_formula(fsrc.text, inst); });
  const auto hint = type_flag(f.type);
  SatResult r = with_source(fsrc, [&] {
    return f.exact ? satisfies_exact(inst, t, phi, f.fuel, std::max(f.cap, f.fuel), hint)
                   : satisfies(inst, t, phi, f.fuel, hint);
  });
  const std::string fragment = r.positive_fragment ? "positive" : "general";
  const Interval& i = r.interval;
  if (io.as_json) {
    json j{{"verb", "sat"}, {"program", prog == "-" ? "<stdin>" : prog}, {"formula", to_string(phi, inst.space)},
           {"fuel", r.fuel_used}, {"exact", i.exact}};
    if (i.exact) j["value"] = inst.space.format(i.lo);
    j["lo"] = inst.space.format(i.lo);
    j["hi"] = inst.space.format(i.hi);
    j["fragment"] = fragment;
    io.emit(j);
  } else {
    if (i.exact)
      io.out << "value = " << inst.space.format(i.lo) << "\n";
    else
      io.out << "lo = " << inst.space.format(i.lo) << ", hi = " << inst.space.format(i.hi) << "\n";
    io.out << "fragment = " << fragment << "\n";
    if (f.exact) io.out << "fuel = " << r.fuel_used << "\n";
  }
  if (f.exact && !i.exact) return inconclusive;
  return ok;
}

inline json distinguished_json(const std::string& verb, const Instance& inst, const verdict::Distinguished& d) {
  return json{{"verb", verb},
              {"verdict", "distinguished"},
              {"witness", to_string(d.formula, inst.space)},
              {"direction", direction_text(d.direction)},
              {"left", interval_json(inst.space, d.left)},
              {"right", interval_json(inst.space, d.right)},
              {"bounds", bounds_json(d.bounds)}};
}

inline void distinguished_text(std::ostream& out, const Instance& inst, const verdict::Distinguished& d) {
  out << "verdict = distinguished\n"
      << "witness = " << to_string(d.formula, inst.space) << "\n"
      << "direction = " << direction_text(d.direction) << "\n"
      << "left = " << interval_text(inst.space, d.left) << "\n"
      << "right = " << interval_text(inst.space, d.right) << "\n"
      << "bounds: " << bounds_text(d.bounds) << "\n";
}

inline int verb_compare(Io& io, const RunConfig& cfg, const std::string& a, const std::string& b, std::size_t suite_size,
                        std::uint64_t fuel, bool both, const std::string& type_text) {
  const Instance inst = make_instance(cfg);
  const Term m = load_term(io, a, inst);
  const Term n = load_term(io, b, inst);
  const Verdict v = compare(inst, m, n, suite_size, fuel, both, cfg.numerals, type_flag(type_text));
  if (const auto* d = std::get_if<verdict::Distinguished>(&v)) {
    if (io.as_json)
      io.emit(distinguished_json("compare", inst, *d));
    else
      distinguished_text(io.out, inst, *d);
    return refuted;
  }
  const bool equiv = std::holds_alternative<verdict::NoDistinctionFound>(v);
  const Bounds& bd = equiv ? std::get<verdict::NoDistinctionFound>(v).bounds : std::get<verdict::RefinesUpTo>(v).bounds;
  const std::string name = equiv ? "no_distinction_found" : "refines_up_to";
  if (io.as_json)
    io.emit(json{{"verb", "compare"}, {"verdict", name}, {"bounds", bounds_json(bd)}});
  else
    io.out << "verdict = " << name << "\nbounds: " << bounds_text(bd) << "\n";
  return ok;
}

inline int verb_distinguish(Io& io, const RunConfig& cfg, const std::string& a, const std::string& b,
                            std::size_t max_size, const std::vector<std::uint64_t>& fuels, bool positive,
                            const std::string& type_text) {
  const Instance inst = make_instance(cfg);
  const Term m = load_term(io, a, inst);
  const Term n = load_term(io, b, inst);
  const auto d = find_distinguishing_formula(inst, m, n, max_size, fuels, cfg.numerals, type_flag(type_text), !positive);
  if (d) {
    if (io.as_json)
      io.emit(distinguished_json("distinguish", inst, *d));
    else
      distinguished_text(io.out, inst, *d);
    return refuted;
  }
  if (io.as_json)
    io.emit(json{{"verb", "distinguish"}, {"verdict", "no_distinction_found"}, {"max_size", max_size}, {"fuels", fuels}});
  else
    io.out << "verdict = no_distinction_found\nmax_size = " << max_size << "\n";
  return ok;
}

struct LawFlags {
  std::vector<std::string> modalities;
  std::vector<std::string> laws{"all"};
  std::size_t samples = 1000, depth = 4, trials = 200, relator_carrier = 3;
  bool timing = false;
};

inline int verb_laws(Io& io, const RunConfig& cfg, const LawFlags& f) {
  static const std::vector<std::string> kPerModality{"leaf-monotone", "scott-chain", "sequential", "unit",
                                                     "decomposable"};
  static const std::vector<std::string> kDefaultModalities{"E", "Eopt", "Epes", "C", "Copt", "Cpes",
                                                           "G", "Gopt", "Gpes", "EG"};
  auto wanted = [&](const std::string& law) {
    return std::find(f.laws.begin(), f.laws.end(), "all") != f.laws.end() ||
           std::find(f.laws.begin(), f.laws.end(), law) != f.laws.end();
  };
  for (const auto& l : f.laws)
    if (l != "all" && l != "relator" && l != "congruence" &&
        std::find(kPerModality.begin(), kPerModality.end(), l) == kPerModality.end())
      throw ConfigError("unknown law '" + l + "'");

  LawOptions o;
  o.samples = f.samples;
  o.seed = cfg.seed;
  o.depth = f.depth;
  o.tolerance = cfg.tolerance;
  o.store = cfg.store;
  std::vector<LawReport> reports;
  const auto& qs = f.modalities.empty() ? kDefaultModalities : f.modalities;
  for (const auto& name : qs) {
    const ModalitySpec q = shipped_modality(name, cfg.store);
    if (wanted("leaf-monotone")) reports.push_back(law_leaf_monotone(q, o));
    if (wanted("scott-chain")) reports.push_back(law_scott_chain(q, o));
    if (wanted("sequential")) reports.push_back(law_sequential(q, o));
    if (wanted("unit")) reports.push_back(law_unit(q, o));
    if (wanted("decomposable")) reports.push_back(law_decomposable(q, o));
  }
  if (wanted("relator"))
    for (auto& r : law_relator(f.relator_carrier)) reports.push_back(std::move(r));
  if (wanted("congruence")) {
    CongruenceOptions co;
    co.trials = f.trials;
    co.seed = cfg.seed;
    reports.push_back(law_congruence(co));
  }

  std::size_t failures = 0;
  json arr = json::array();
  for (const auto& r : reports) {
    failures += r.failures;
    if (io.as_json) {
      json j{{"law", r.law}, {"modality", r.modality}, {"samples", r.samples}, {"failures", r.failures},
             {"skipped", r.skipped}};
      if (!r.counterexample.empty()) j["counterexample"] = r.counterexample;
      if (f.timing) j["seconds"] = r.seconds;
      arr.push_back(j);
    } else {
      io.out << (r.failures ? "FAIL " : "ok   ") << r.law << (r.modality.empty() ? "" : " " + r.modality)
             << ": samples = " << r.samples << ", failures = " << r.failures << ", skipped = " << r.skipped;
      if (f.timing) io.out << ", seconds = " << r.seconds;
      io.out << "\n";
      if (!r.counterexample.empty()) io.out << "  counterexample: " << r.counterexample << "\n";
    }
  }
  if (io.as_json)
    io.emit(json{{"verb", "laws"}, {"seed", cfg.seed}, {"reports", arr}, {"failures", failures}});
  else
    io.out << "total failures = " << failures << "\n";
  return failures ? refuted : ok;
}

// ----- entry point ---------------------------------------------------------------

/// Runs one command line; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantitative behavioural reasoning for call-by-push-value programs", "cbpv-quant"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  add_global_flags(app, g);

  std::string prog, prog2, form, type_text;
  std::uint64_t fuel = 0;
  std::size_t width = 0, suite_size = 0, max_size = 6;
  bool both = false, positive = false;
  SatFlags sf;
  LawFlags lf;
  std::vector<std::uint64_t> fuels{8, 32, 128};

  auto* tc = app.add_subcommand("typecheck", "infer the type of a program");
  tc->add_option("program", prog, "program file or -")->required();
  tc->add_option("--type", type_text, "check against this computation type");

  auto* ev = app.add_subcommand("eval", "print the depth-bounded effect tree");
  ev->add_option("program", prog, "program file or -")->required();
  auto* ev_fuel = ev->add_option("--fuel", fuel, "machine steps");
  auto* ev_width = ev->add_option("--width", width, "children shown per N-indexed node");

  auto* st = app.add_subcommand("sat", "degree to which a program satisfies a formula");
  st->add_option("program", prog, "program file or -")->required();
  st->add_option("formula", form, "formula file or -")->required();
  auto* st_fuel = st->add_option("--fuel", sf.fuel, "machine steps");
  st->add_flag("--exact", sf.exact, "double the fuel until the value is exact (exit 2 if --fuel-cap is hit first)");
  st->add_option("--fuel-cap", sf.cap, "largest fuel tried by --exact (default 64 x --fuel)");
  st->add_option("--type", type_text, "type of the program when it cannot be inferred");

  auto* cp = app.add_subcommand("compare", "bounded behavioural preorder check");
  cp->add_option("left", prog, "program file or -")->required();
  cp->add_option("right", prog2, "program file or -")->required();
  auto* cp_size = cp->add_option("--suite-size", suite_size, "formula size bound");
  auto* cp_fuel = cp->add_option("--fuel", fuel, "machine steps");
  cp->add_flag("--both", both, "check both directions");
  cp->add_option("--type", type_text, "common type when it cannot be inferred");

  auto* ds = app.add_subcommand("distinguish", "search for the smallest distinguishing formula");
  ds->add_option("left", prog, "program file or -")->required();
  ds->add_option("right", prog2, "program file or -")->required();
  ds->add_option("--max-size", max_size, "largest formula size searched");
  ds->add_option("--fuel-schedule", fuels, "fuels tried at each size")->delimiter(',')->allow_extra_args(false);
  ds->add_flag("--positive", positive, "exclude negation from closures");
  ds->add_option("--type", type_text, "common type when it cannot be inferred");

  auto* lw = app.add_subcommand("laws", "randomised modality law suites");
  lw->add_option("--modality", lf.modalities, "modality name, repeatable (default: all shipped)")->allow_extra_args(false);
  lw->add_option("--law", lf.laws,
                 "leaf-monotone, scott-chain, sequential, unit, decomposable, relator, congruence or all")
      ->allow_extra_args(false);
  lw->add_option("--samples", lf.samples, "samples per law and modality");
  lw->add_option("--depth", lf.depth, "sampled tree depth");
  lw->add_option("--trials", lf.trials, "congruence trials");
  lw->add_option("--relator-carrier", lf.relator_carrier, "largest Boolean carrier for relator laws");
  lw->add_flag("--timing", lf.timing, "include wall-clock seconds (breaks byte-identical reports)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ok;
    }
    err << "error: " << e.what() << "\n";
    return inconclusive;
  }

  Io io{in, out, err, g.json};
  try {
    if (tc->parsed()) return verb_typecheck(io, build_config(g, {prog}), prog, type_text);
    if (ev->parsed()) {
      RunConfig cfg = build_config(g, {prog});
      if (!ev_fuel->count()) fuel = cfg.fuel;
      return verb_eval(io, cfg, prog, fuel, ev_width->count() ? width : cfg.explore_width);
    }
    if (st->parsed()) {
      RunConfig cfg = build_config(g, {prog, form});
      if (!st_fuel->count()) sf.fuel = cfg.fuel;
      if (sf.cap == 0) sf.cap = sf.fuel * 64;
      sf.type = type_text;
      return verb_sat(io, cfg, prog, form, sf);
    }
    if (cp->parsed()) {
      RunConfig cfg = build_config(g, {prog, prog2});
      if (!cp_size->count()) suite_size = cfg.suite_size;
      if (!cp_fuel->count()) fuel = cfg.fuel;
      return verb_compare(io, cfg, prog, prog2, suite_size, fuel, both, type_text);
    }
    if (ds->parsed()) return verb_distinguish(io, build_config(g, {prog, prog2}), prog, prog2, max_size, fuels, positive, type_text);
    if (lw->parsed()) return verb_laws(io, build_config(g, {}), lf);
  } catch (const std::exception& e) {
    if (g.json)
      io.emit(json{{"error", e.what()}});
    err << "error: " << e.what() << "\n";
    return inconclusive;
  }
  return inconclusive;
}

}  // namespace cbpvq::cli
