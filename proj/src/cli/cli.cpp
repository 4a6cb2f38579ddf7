#include "vrg/cli/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "vrg/error.hpp"
#include "vrg/grounding/grounding.hpp"
#include "vrg/numerics/gradcheck.hpp"
#include "vrg/synth/synthgen.hpp"

namespace vrg::cli {

Settings::Settings() { model.dropout = train.dropout; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double as_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

std::size_t as_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: " + key + " expects true or false, got '" + v + "'");
}

using Setter = void (*)(Settings&, const std::string&, const std::string&);

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> s{
      {"frames", [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.frames = as_size(k, v); }},
      {"clip_length",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.clip_length = as_size(k, v); }},
      {"regions", [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.regions = as_size(k, v); }},
      {"appearance_dim",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.appearance_dim = as_size(k, v); }},
      {"region_dim",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.region_dim = as_size(k, v); }},
      {"word_dim", [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.word_dim = as_size(k, v); }},
      {"word_embed_dim",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.word_embed_dim = as_size(k, v); }},
      {"hidden",
       [](Settings& c, const std::string& k, const std::string& v) {
         c.model.encoder.hidden = c.model.decoder.hidden = as_size(k, v);
       }},
      {"attention_dim",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.encoder.attention_dim = as_size(k, v); }},
      {"token_embed_dim",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.decoder.token_embed_dim = as_size(k, v); }},
      {"max_decode_length",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.decoder.max_decode_length = as_size(k, v); }},
      {"embedding_path", [](Settings& c, const std::string&, const std::string& v) { c.model.embedding_path = v; }},
      {"embedding_seed",
       [](Settings& c, const std::string& k, const std::string& v) { c.model.embedding_seed = as_size(k, v); }},
      {"use_msg", [](Settings& c, const std::string& k, const std::string& v) { c.train.use_msg = as_bool(k, v); }},
      {"use_clip", [](Settings& c, const std::string& k, const std::string& v) { c.train.use_clip = as_bool(k, v); }},
      {"use_tau", [](Settings& c, const std::string& k, const std::string& v) { c.train.use_tau = as_bool(k, v); }},
      {"use_predicate",
       [](Settings& c, const std::string& k, const std::string& v) { c.train.use_predicate = as_bool(k, v); }},
      {"lr", [](Settings& c, const std::string& k, const std::string& v) { c.train.lr = as_double(k, v); }},
      {"batch", [](Settings& c, const std::string& k, const std::string& v) { c.train.batch = as_size(k, v); }},
      {"max_epochs", [](Settings& c, const std::string& k, const std::string& v) { c.train.max_epochs = as_size(k, v); }},
      {"dropout",
       [](Settings& c, const std::string& k, const std::string& v) { c.train.dropout = c.model.dropout = as_double(k, v); }},
      {"patience", [](Settings& c, const std::string& k, const std::string& v) { c.train.patience = as_size(k, v); }},
      {"seed", [](Settings& c, const std::string& k, const std::string& v) { c.train.seed = as_size(k, v); }},
      {"validation_fraction",
       [](Settings& c, const std::string& k, const std::string& v) { c.train.validation_fraction = as_double(k, v); }},
      {"clip_norm", [](Settings& c, const std::string& k, const std::string& v) { c.train.clip_norm = as_double(k, v); }},
      {"jobs", [](Settings& c, const std::string& k, const std::string& v) { c.train.jobs = as_size(k, v); }},
      {"sigma", [](Settings& c, const std::string& k, const std::string& v) { c.sigma = as_double(k, v); }},
      {"spatial_thresholds",
       [](Settings& c, const std::string& k, const std::string& v) {
         std::vector<double> t;
         std::stringstream ss(v);
         for (std::string part; std::getline(ss, part, ',');) t.push_back(as_double(k, trim(part)));
         c.metric.spatial_thresholds = t;
       }},
      {"temporal_threshold",
       [](Settings& c, const std::string& k, const std::string& v) { c.metric.temporal_threshold = as_double(k, v); }},
  };
  return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_key(Settings& settings, const std::string& key, const std::string& value) {
  for (const auto& [name, fn] : setters()) {
    if (name == key) {
      fn(settings, key, value);
      settings.explicit_keys.insert(key);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

Settings load_config(const std::string& path) {
  Settings s;
  if (path.empty()) return s;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config " + path);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
    set_key(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return s;
}

void apply_ablations(Settings& settings, bool no_msg, bool no_clip, bool no_tau, bool co_occur) {
  if (no_msg) settings.train.use_msg = false;
  if (no_tau) settings.train.use_tau = false;
  if (co_occur) settings.train.use_predicate = false;
  if (no_clip) {
    settings.train.use_clip = false;
    if (!settings.explicit_keys.count("sigma")) settings.sigma = 0.0001;
  }
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by the model-facing subcommands.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;
  bool no_msg = false, no_clip = false, no_tau = false, co_occur = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "flat key=value file");
    app->add_option("--set", sets, "key=value override, repeatable");
    for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{{"--seed", "seed"},
                                                                                   {"--jobs", "jobs"},
                                                                                   {"--sigma", "sigma"},
                                                                                   {"--lr", "lr"},
                                                                                   {"--batch", "batch"},
                                                                                   {"--epochs", "max_epochs"},
                                                                                   {"--dropout", "dropout"}}) {
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; });
    }
    app->add_flag("--no-msg", no_msg, "disable message passing");
    app->add_flag("--no-clip", no_clip, "disable clip-level attention");
    app->add_flag("--no-tau", no_tau, "replace temporal attention by mean pooling");
    app->add_flag("--co-occur", co_occur, "drop the predicate from the query");
  }

  Settings settings() const {
    auto s = load_config(config);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_key(s, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    for (const auto& [k, v] : values) set_key(s, k, v);
    apply_ablations(s, no_msg, no_clip, no_tau, co_occur);
    s.train.validate();
    s.metric.validate();
    if (!(s.sigma >= 0.0)) throw ConfigError("config: sigma must be non-negative");
    return s;
  }
};

int cmd_gen(const std::string& out_dir, std::size_t count, std::size_t test_count, double zero_shot,
            std::uint64_t seed, std::size_t jobs, bool shuffle, std::ostream& out) {
  synth::SceneSpec spec;
  spec.seed = seed;
  spec.shuffle_slots = shuffle;
  synth::EmitOptions o{count, test_count, zero_shot, jobs};
  const auto r = synth::emit_dataset(spec, o, out_dir);
  out << "manifest " << r.manifest << "\ntrain " << r.train_manifest << "\ntest " << r.test_manifest
      << "\nzero_shot_rows " << r.zero_shot_rows.size() << '\n';
  return 0;
}

int cmd_train(const Settings& s, const std::string& manifest, const std::string& checkpoint,
              const std::string& log_path, bool search, std::ostream& out) {
  auto cfg = s.train;
  cfg.checkpoint_path = checkpoint;
  cfg.log_path = log_path;
  const auto samples = data::load_samples(manifest, {search});
  const auto r = train::train(samples, cfg, s.model);
  // The checkpoint holds the best epoch already; rewrite it so an unimproved run still leaves one.
  r.model.save(checkpoint);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.report.validation_loss[r.report.best_epoch]);
  out << "train_samples " << r.report.train_samples << "\nvalidation_samples " << r.report.validation_samples
      << "\nepochs " << r.report.train_loss.size() << "\nbest_epoch " << r.report.best_epoch << "\nvalidation_loss "
      << buf << '\n';
  if (search) {
    const auto val = train::validation_split(samples, cfg.validation_fraction, cfg.seed).second;
    const auto sr = train::search_sigma(r.model, val, train::default_sigma_grid(), cfg.jobs);
    for (std::size_t i = 0; i < sr.grid.size(); ++i) {
      std::snprintf(buf, sizeof buf, "sigma_grid %.17g %.17g", sr.grid[i], sr.acc_r[i]);
      out << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "sigma %.17g", sr.best);
    out << buf << '\n';
  }
  return 0;
}

int cmd_ground(const Settings& s, const std::string& model_path, const std::string& manifest,
               const std::string& results, std::ostream& out) {
  const auto model = Model::load(model_path);
  const auto samples = data::load_samples(manifest);
  const auto r = grounding::ground_all(model, samples, s.sigma, s.train.jobs);
  grounding::write_results(results, r);
  out << "grounded " << r.size() << " pairs\n";
  return 0;
}

struct EvalArgs {
  std::string results, manifest, zero_shot, json;
  bool random = false, static_only = false, dynamic_only = false;
};

int cmd_eval(const Settings& s, const EvalArgs& a, std::ostream& out) {
  if (a.static_only && a.dynamic_only) throw UsageError("--static-only and --dynamic-only exclude each other");
  if (a.random == !a.results.empty()) throw UsageError("eval needs exactly one of --results and --random-baseline");
  auto samples = data::load_samples(a.manifest, {true});
  if (!a.zero_shot.empty()) {
    std::vector<data::RelationQuery> train_q;
    for (const auto& e : data::read_manifest(a.zero_shot)) train_q.push_back(data::tokenize_relation(e.relation));
    samples = eval::zero_shot_split(train_q, samples);
  }
  if (a.static_only) samples = eval::filter_predicates(samples, eval::PredicateKind::Static);
  if (a.dynamic_only) samples = eval::filter_predicates(samples, eval::PredicateKind::Dynamic);
  const auto gt = eval::index_ground_truth(samples);

  std::vector<grounding::GroundingResult> results;
  if (a.random) {
    results = eval::random_baseline(samples, s.model.encoder.clip_length, s.sigma, s.train.seed);
  } else {
    std::map<eval::PairKey, grounding::GroundingResult> by_key;
    for (auto& r : grounding::read_results(a.results)) by_key[{r.video_id, r.relation}] = std::move(r);
    for (const auto& smp : samples) {
      auto it = by_key.find({smp.video_id, smp.query.raw});
      grounding::GroundingResult r;
      if (it != by_key.end()) r = it->second;
      r.video_id = smp.video_id;  // a missing prediction counts as a miss
      r.relation = smp.query.raw;
      results.push_back(std::move(r));
    }
  }
  const auto rep = eval::accuracy(results, gt, s.metric);
  out << eval::format_report(rep);
  if (!a.json.empty()) {
    std::ofstream js(a.json);
    if (!js) throw FormatError("cannot write " + a.json);
    js << eval::report_records(rep);
  }
  return 0;
}

ModelConfig gradcheck_config() {
  ModelConfig c;
  auto& e = c.encoder;
  e.frames = 6;
  e.clip_length = 3;
  e.regions = 4;
  e.appearance_dim = 6;
  e.region_dim = 8;
  e.word_dim = 10;
  e.word_embed_dim = 8;
  e.hidden = 16;
  e.attention_dim = 8;
  c.decoder.hidden = 16;
  c.decoder.token_embed_dim = 8;
  return c;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  const auto mc = gradcheck_config();
  std::vector<data::RelationQuery> qs;
  for (const char* r : {"dog-left-car", "person-move_toward-ball", "car-above-dog", "ball-away-person"}) {
    qs.push_back(data::tokenize_relation(r));
  }
  Model model(mc, data::Vocabulary::from_relations(qs), make_embedding_table(mc), seed);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  data::VideoFeatures v;
  v.video_id = "gradcheck";
  v.frame_width = v.frame_height = 64;
  v.total_frames = 60;
  v.regions_per_frame = mc.encoder.regions;
  v.appearance_dim = mc.encoder.appearance_dim;
  for (std::size_t i = 0; i < mc.encoder.frames; ++i) v.sampled_frame_indices.push_back(static_cast<std::uint32_t>(i * 10));
  for (std::size_t r = 0; r < mc.encoder.frames * mc.encoder.regions; ++r) {
    data::RegionProposal p;
    const double x = 48 * u(rng), y = 48 * u(rng);
    p.box = {x, y, x + 4 + 12 * u(rng), y + 4 + 12 * u(rng)};
    for (std::size_t k = 0; k < mc.encoder.appearance_dim; ++k) p.appearance.push_back(2 * u(rng) - 1);
    v.regions.push_back(std::move(p));
  }

  num::LossFn fn = [&](const num::ParameterSet& p, num::Gradients* g) {
    model.parameters() = p;
    return model.loss(v, qs[1], nullptr, g);
  };
  num::ParameterSet params = model.parameters();
  const auto rep = num::grad_check(fn, params, 1e-5);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "coordinates %zu\nmax_rel_error %.3e (%s[%zu], analytic %.3e, numeric %.3e)\nmax_abs_error %.3e\n"
                "resolved_coordinates %zu\nmax_resolved_rel_error %.3e\n",
                rep.coordinates, rep.max_rel_error, rep.worst_parameter.c_str(), rep.worst_index, rep.worst_analytic,
                rep.worst_numeric, rep.max_abs_error, rep.resolved_coordinates, rep.max_resolved_rel_error);
  out << buf;
  return rep.max_rel_error < 1e-4 ? 0 : 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weakly supervised video relation grounding", "vrg"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "write a synthetic dataset");
  std::string gen_out;
  std::size_t count = 0, test_count = 0, gen_jobs = 1;
  double zero_shot = 0.0;
  std::uint64_t gen_seed = 0;
  bool shuffle = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--count", count, "scenes")->required();
  gen->add_option("--test-count", test_count, "trailing scenes reserved for test");
  gen->add_option("--zero-shot", zero_shot, "fraction of test rows with unseen triplets");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--jobs", gen_jobs);
  gen->add_flag("--shuffle-slots", shuffle, "shuffle region slots in every frame");

  auto* tr = app.add_subcommand("train", "train on a manifest");
  Common tr_common;
  std::string tr_manifest, tr_out, tr_log;
  bool tr_search = false;
  tr_common.attach(tr);
  tr->add_option("--manifest", tr_manifest)->required();
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--log", tr_log, "per-epoch loss log");
  tr->add_flag("--search-sigma", tr_search, "pick σ on the validation split (needs ground truth)");

  auto* gr = app.add_subcommand("ground", "ground every manifest row");
  Common gr_common;
  std::string gr_model, gr_manifest, gr_out;
  gr_common.attach(gr);
  gr->add_option("--model", gr_model)->required();
  gr->add_option("--manifest", gr_manifest)->required();
  gr->add_option("--out", gr_out, "results file")->required();

  auto* ev = app.add_subcommand("eval", "score results against ground truth");
  Common ev_common;
  EvalArgs ea;
  ev_common.attach(ev);
  ev->add_option("--results", ea.results);
  ev->add_option("--manifest", ea.manifest, "manifest with ground truth")->required();
  ev->add_option("--zero-shot", ea.zero_shot, "training manifest; keep only unseen triplets");
  ev->add_option("--json", ea.json, "also write JSON lines here");
  ev->add_flag("--random-baseline", ea.random, "score random attention maps instead of results");
  ev->add_flag("--static-only", ea.static_only);
  ev->add_flag("--dynamic-only", ea.dynamic_only);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check on a tiny model");
  std::uint64_t gc_seed = 17;
  gc->add_option("--seed", gc_seed);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "vrg: " << e.what() << '\n' << app.help();
    return 1;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == gen) return cmd_gen(gen_out, count, test_count, zero_shot, gen_seed, gen_jobs, shuffle, out);
    if (active == tr) return cmd_train(tr_common.settings(), tr_manifest, tr_out, tr_log, tr_search, out);
    if (active == gr) return cmd_ground(gr_common.settings(), gr_model, gr_manifest, gr_out, out);
    if (active == ev) return cmd_eval(ev_common.settings(), ea, out);
    return cmd_gradcheck(gc_seed, out);
  } catch (const UsageError& e) {
    err << "vrg: " << e.what() << '\n' << active->help();
    return 1;
  } catch (const ConfigError& e) {
    err << "vrg: " << e.what() << '\n' << active->help();
    return 1;
  } catch (const std::exception& e) {
    err << "vrg: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace vrg::cli
