#include "synguide/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "synguide/util.hpp"

namespace synguide {

namespace {

// Settings that only become part of the experiment once everything is read.
struct Builder {
  RunConfig cfg;
  PgConfig pg;
  bool pg_on = false;
  RgConfig rg;
  bool rg_on = false;
};

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(Builder&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) out.push_back(trim(part));
  return out;
}

std::size_t as_count(const std::string& v, const std::string& key) {
  const long long n = parse_int(v, key);
  if (n < 0) throw std::invalid_argument("config key '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(n);
}

bool as_bool(const std::string& v, const std::string& key) {
  if (v == "on" || v == "1" || v == "true") return true;
  if (v == "off" || v == "0" || v == "false") return false;
  throw std::invalid_argument("config key '" + key + "' expects on/off, got '" + v + "'");
}

std::vector<double> as_reals(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& p : split_commas(v)) out.push_back(parse_double(p, key));
  return out;
}

std::vector<std::size_t> as_counts(const std::string& v, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& p : split_commas(v)) out.push_back(as_count(p, key));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

std::string on_off(bool b) { return b ? "on" : "off"; }

// Wraps a setter so that parse errors name the key.
template <typename F>
std::function<void(Builder&, const std::string&)> setter(const std::string& key, F f) {
  return [key, f](Builder& b, const std::string& v) {
    try {
      f(b, v, key);
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      if (msg.find("'" + key + "'") != std::string::npos || msg.find(key) == 0) throw;
      throw std::invalid_argument("config key '" + key + "': " + msg);
    }
  };
}

#define SG_COUNT(name, path)                                                           \
  Field {                                                                              \
    name, [](const RunConfig& c) { return std::to_string(c.experiment.path); },        \
        setter(name, [](Builder& b, const std::string& v, const std::string& k) {      \
          b.cfg.experiment.path = as_count(v, k);                                      \
        })                                                                             \
  }

#define SG_REAL(name, path)                                                            \
  Field {                                                                              \
    name, [](const RunConfig& c) { return format_double(c.experiment.path); },         \
        setter(name, [](Builder& b, const std::string& v, const std::string& k) {      \
          b.cfg.experiment.path = parse_double(v, k);                                  \
        })                                                                             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      SG_COUNT("dim", geometry.dim),
      SG_COUNT("classes", geometry.classes),
      SG_COUNT("common_modes", geometry.common_modes),
      SG_REAL("class_separation", geometry.class_separation),
      SG_REAL("mode_split", geometry.mode_split),
      SG_REAL("rare_signature", geometry.rare_signature),
      SG_REAL("stdev", geometry.stdev),
      SG_REAL("rare_weight", geometry.rare_weight),
      SG_REAL("content_drop", knobs.content_drop),
      Field{"appearance_offset",
            [](const RunConfig& c) { return join(c.experiment.knobs.appearance_offset); },
            setter("appearance_offset",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.cfg.experiment.knobs.appearance_offset = as_reals(v, k);
                   })},
      Field{"appearance_scale",
            [](const RunConfig& c) { return join(c.experiment.knobs.appearance_scale); },
            setter("appearance_scale",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.cfg.experiment.knobs.appearance_scale = as_reals(v, k);
                   })},
      SG_REAL("quality_rate", knobs.quality_rate),
      SG_COUNT("train_per_class", train_per_class),
      SG_COUNT("val_per_class", val_per_class),
      SG_COUNT("test_per_class", test_per_class),
      SG_COUNT("syn_per_class", syn_per_class),
      SG_COUNT("prior_per_class", prior_per_class),
      SG_REAL("rejection_threshold", rejection_threshold),
      Field{"hidden", [](const RunConfig& c) { return join(c.experiment.hidden); },
            setter("hidden",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.cfg.experiment.hidden = as_counts(v, k);
                   })},
      Field{"prior_hidden", [](const RunConfig& c) { return join(c.experiment.prior_hidden); },
            setter("prior_hidden",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.cfg.experiment.prior_hidden = as_counts(v, k);
                   })},
      Field{"activation",
            [](const RunConfig& c) { return to_string(c.experiment.activation); },
            setter("activation",
                   [](Builder& b, const std::string& v, const std::string&) {
                     b.cfg.experiment.activation = parse_activation(v);
                   })},
      SG_COUNT("prior_epochs", prior_epochs),
      SG_COUNT("real_shots_per_class", real_shots_per_class),
      SG_COUNT("loss_split_real_per_class", loss_split_real_per_class),
      Field{"naive_mixing", [](const RunConfig& c) { return on_off(c.experiment.naive_mixing); },
            setter("naive_mixing",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.cfg.experiment.naive_mixing = as_bool(v, k);
                   })},
      SG_REAL("coverage_radius", coverage_radius),
      SG_COUNT("epochs", train.epochs),
      SG_COUNT("batch_size", train.batch_size),
      SG_REAL("lr", train.lr),
      Field{"init", [](const RunConfig& c) { return to_string(c.experiment.train.init); },
            setter("init",
                   [](Builder& b, const std::string& v, const std::string&) {
                     b.cfg.experiment.train.init = parse_init_mode(v);
                   })},
      SG_COUNT("eval_every", train.eval_every),
      Field{"pg", [](const RunConfig& c) { return on_off(c.experiment.train.pg.has_value()); },
            setter("pg",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.pg_on = as_bool(v, k);
                   })},
      Field{"pg_metric",
            [](const RunConfig& c) {
              return to_string(c.experiment.train.pg.value_or(PgConfig{}).metric);
            },
            setter("pg_metric",
                   [](Builder& b, const std::string& v, const std::string&) {
                     b.pg.metric = parse_metric(v);
                   })},
      Field{"pg_similarity",
            [](const RunConfig& c) {
              return to_string(c.experiment.train.pg.value_or(PgConfig{}).similarity);
            },
            setter("pg_similarity",
                   [](Builder& b, const std::string& v, const std::string&) {
                     b.pg.similarity = parse_similarity(v);
                   })},
      Field{"pg_temperature",
            [](const RunConfig& c) {
              return format_double(c.experiment.train.pg.value_or(PgConfig{}).temperature);
            },
            setter("pg_temperature",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.pg.temperature = parse_double(v, k);
                   })},
      Field{"pg_lambda3",
            [](const RunConfig& c) {
              return format_double(c.experiment.train.pg.value_or(PgConfig{}).lambda3);
            },
            setter("pg_lambda3",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.pg.lambda3 = parse_double(v, k);
                   })},
      Field{"pg_lambda3_grid", [](const RunConfig& c) { return join(c.lambda3_grid); },
            setter("pg_lambda3_grid",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.cfg.lambda3_grid = as_reals(v, k);
                   })},
      Field{"rg", [](const RunConfig& c) { return on_off(c.experiment.train.rg.has_value()); },
            setter("rg",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.rg_on = as_bool(v, k);
                   })},
      Field{"rg_lambda1",
            [](const RunConfig& c) {
              return format_double(c.experiment.train.rg.value_or(RgConfig{}).lambda1);
            },
            setter("rg_lambda1",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.rg.lambda1 = parse_double(v, k);
                   })},
      Field{"rg_lambda2",
            [](const RunConfig& c) {
              return format_double(c.experiment.train.rg.value_or(RgConfig{}).lambda2);
            },
            setter("rg_lambda2",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.rg.lambda2 = parse_double(v, k);
                   })},
      Field{"rg_project",
            [](const RunConfig& c) {
              return on_off(c.experiment.train.rg.value_or(RgConfig{}).project);
            },
            setter("rg_project",
                   [](Builder& b, const std::string& v, const std::string& k) {
                     b.rg.project = as_bool(v, k);
                   })},
  };
  return table;
}

#undef SG_COUNT
#undef SG_REAL

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    k.push_back("seeds");
    k.push_back("out_dir");
    return k;
  }();
  return keys;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& p : split_commas(text)) {
    const long long v = parse_int(p, "seeds");
    if (v < 0) throw std::invalid_argument("config key 'seeds' must list nonnegative integers");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw std::invalid_argument("config key 'seeds' is empty");
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto& keys = run_config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw std::invalid_argument("unknown config key '" + key + "' on line " +
                                  std::to_string(line_no));
    }
    if (!values.emplace(key, value).second) {
      throw std::invalid_argument("duplicate config key '" + key + "' on line " +
                                  std::to_string(line_no));
    }
  }

  Builder b;
  for (const auto& f : fields()) {
    const auto it = values.find(f.key);
    if (it != values.end()) f.set(b, it->second);
  }
  if (b.pg_on) b.cfg.experiment.train.pg = b.pg;
  if (b.rg_on) b.cfg.experiment.train.rg = b.rg;
  if (const auto it = values.find("seeds"); it != values.end()) {
    b.cfg.seeds = parse_seed_list(it->second);
  }
  if (const auto it = values.find("out_dir"); it != values.end()) {
    if (it->second.empty()) throw std::invalid_argument("config key 'out_dir' is empty");
    b.cfg.out_dir = it->second;
  }
  if (!b.cfg.lambda3_grid.empty() && !b.cfg.experiment.train.pg) {
    throw std::invalid_argument("config key 'pg_lambda3_grid' requires pg=on");
  }
  b.cfg.experiment.validate();
  return b.cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(*this) + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

}  // namespace synguide
