#include "rse/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "rse/error.hpp"

namespace rse {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'R', 'S', 'E', '1'};

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

void put_doubles(std::string& out, std::span<const double> values) {
  for (double x : values) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorKind::CorruptArtifact, path.string() + ": " + what);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "read failure on " + path.string());
  return data;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_round_trip(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> config_pairs(const TrainConfig& cfg) {
  return {
      {"tau", format_round_trip(cfg.tau)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"encoder_lr", format_round_trip(cfg.encoder_lr)},
      {"relation_lr", format_round_trip(cfg.relation_lr)},
      {"epochs", std::to_string(cfg.epochs)},
      {"eval_every_steps", std::to_string(cfg.eval_every_steps)},
      {"per_relation_cap", std::to_string(cfg.per_relation_cap)},
      {"seed", std::to_string(cfg.seed)},
      {"sub_batch_size", std::to_string(cfg.sub_batch_size)},
      {"hard_negatives", cfg.hard_negatives ? "true" : "false"},
      {"objective", cfg.objective == Objective::Merged ? "merged" : "relational"},
      {"d_in", std::to_string(cfg.encoder.d_in)},
      {"d", std::to_string(cfg.encoder.d)},
      {"max_len", std::to_string(cfg.encoder.max_len)},
      {"min_count", std::to_string(cfg.encoder.min_count)},
  };
}

}  // namespace

std::string format_decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorKind::Io, "write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error(ErrorKind::Io, "cannot move model into " + path.string() + ": " + ec.message());
  }
}

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
  const Model& m = artifact.model;
  validate(m.encoder);
  if (m.relations.dim() != m.encoder.d()) {
    throw Error(ErrorKind::Shape, "relation dim differs from encoder dim");
  }
  std::string payload;
  payload.reserve(8 * (m.encoder.parameter_count() + m.relations.embeddings().size()));
  put_doubles(payload, m.encoder.embedding_table.flat());
  put_doubles(payload, m.encoder.projection_weight.flat());
  put_doubles(payload, m.encoder.projection_bias);
  put_doubles(payload, m.relations.embeddings().flat());

  json config = json::object();
  for (const auto& [k, v] : config_pairs(artifact.config)) config[k] = v;
  const json header = {
      {"format_version", artifact.format_version},
      {"vocab_size", m.vocab.size()},
      {"d_in", m.encoder.d_in()},
      {"d", m.encoder.d()},
      {"max_len", m.max_len},
      {"vocab", m.vocab.tokens()},
      {"relations", m.relations.names()},
      {"config", config},
      {"payload_bytes", payload.size()},
      {"payload_fnv1a64", hex64(fnv1a64(payload))},
  };
  const std::string header_text = header.dump();

  std::string file(kMagic, sizeof kMagic);
  put_u64(file, header_text.size());
  file += header_text;
  file += payload;
  write_file_atomic(path, file);
}

ModelArtifact load_model(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  if (data.size() < 12 || std::string_view(data).substr(0, 4) != std::string_view(kMagic, 4)) {
    corrupt(path, "bad magic");
  }
  const std::uint64_t header_len = get_u64(std::string_view(data).substr(4, 8));
  if (header_len > data.size() - 12) corrupt(path, "truncated header");
  json header;
  try {
    header = json::parse(data.begin() + 12, data.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    corrupt(path, std::string("unreadable header: ") + e.what());
  }

  ModelArtifact art;
  try {
    art.format_version = header.at("format_version").get<std::uint32_t>();
    if (art.format_version != kModelFormatVersion) {
      corrupt(path, "unsupported format_version " + std::to_string(art.format_version));
    }
    const auto vocab_size = header.at("vocab_size").get<std::size_t>();
    const auto d_in = header.at("d_in").get<std::size_t>();
    const auto d = header.at("d").get<std::size_t>();
    art.model.max_len = header.at("max_len").get<std::size_t>();
    auto tokens = header.at("vocab").get<std::vector<std::string>>();
    auto relation_names = header.at("relations").get<std::vector<std::string>>();
    const auto payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
    const auto checksum = header.at("payload_fnv1a64").get<std::string>();

    if (tokens.size() != vocab_size) corrupt(path, "vocab length disagrees with vocab_size");
    if (vocab_size == 0 || d_in == 0 || d == 0 || relation_names.empty() || art.model.max_len == 0) {
      corrupt(path, "zero dimension in header");
    }
    // Guard the products against overflow before sizing anything.
    constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
    if (vocab_size > kLimit / d_in || d_in > kLimit / d || relation_names.size() > kLimit / d) {
      corrupt(path, "implausible dimensions");
    }
    const std::uint64_t values = vocab_size * d_in + d_in * d + d + relation_names.size() * d;
    const std::uint64_t remaining = data.size() - 12 - header_len;
    if (payload_bytes != values * 8 || remaining != payload_bytes) {
      corrupt(path, "payload length disagrees with header dims");
    }
    const std::string_view payload = std::string_view(data).substr(12 + header_len);
    if (hex64(fnv1a64(payload)) != checksum) corrupt(path, "payload checksum mismatch");

    std::size_t offset = 0;
    auto fill = [&](std::span<double> dst) {
      for (double& x : dst) {
        x = std::bit_cast<double>(get_u64(payload.substr(offset, 8)));
        if (!std::isfinite(x)) corrupt(path, "non-finite parameter");
        offset += 8;
      }
    };
    art.model.encoder = EncoderParams{Matrix(vocab_size, d_in), Matrix(d_in, d), DenseVector(d)};
    fill(art.model.encoder.embedding_table.flat());
    fill(art.model.encoder.projection_weight.flat());
    fill(art.model.encoder.projection_bias);
    Matrix rows(relation_names.size(), d);
    fill(rows.flat());

    art.model.vocab = Vocab::from_tokens(std::move(tokens));
    art.model.relations = RelationTable(std::move(relation_names), std::move(rows));

    TrainConfig cfg;
    for (const auto& [k, v] : header.at("config").items()) apply_config_value(cfg, k, v.get<std::string>());
    art.config = cfg;
  } catch (const json::exception& e) {
    corrupt(path, std::string("malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptArtifact) throw;
    corrupt(path, e.what());
  }
  return art;
}

std::vector<SentenceTriple> read_triples_jsonl(std::istream& in,
                                               std::vector<std::size_t>* line_numbers) {
  std::vector<SentenceTriple> out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception&) {
      fail("invalid JSON");
    }
    if (!obj.is_object()) fail("expected a JSON object");
    SentenceTriple t;
    for (const char* key : {"head", "relation", "tail"}) {
      if (!obj.contains(key) || !obj[key].is_string()) fail(std::string("missing string field \"") + key + "\"");
    }
    t.head = obj["head"].get<std::string>();
    t.relation = obj["relation"].get<std::string>();
    t.tail = obj["tail"].get<std::string>();
    if (obj.contains("hard_neg") && !obj["hard_neg"].is_null()) {
      if (!obj["hard_neg"].is_string()) fail("\"hard_neg\" must be a string");
      t.hard_neg = obj["hard_neg"].get<std::string>();
      if (trim(*t.hard_neg).empty()) fail("empty hard_neg sentence");
    }
    if (trim(t.head).empty() || trim(t.tail).empty()) fail("empty head or tail sentence");
    if (t.relation.empty()) fail("empty relation name");
    out.push_back(std::move(t));
    if (line_numbers) line_numbers->push_back(lineno);
  }
  return out;
}

std::vector<SentenceTriple> read_triples_jsonl(const std::filesystem::path& path,
                                               std::vector<std::size_t>* line_numbers) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return read_triples_jsonl(in, line_numbers);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_triples_jsonl(std::ostream& out, std::span<const SentenceTriple> triples) {
  for (const auto& t : triples) {
    json obj = {{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}};
    if (t.hard_neg) obj["hard_neg"] = *t.hard_neg;
    out << obj.dump() << '\n';
  }
}

std::vector<ScoredPair> read_scored_pairs(std::istream& in) {
  std::vector<ScoredPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": expected 3 tab-separated columns");
    }
    ScoredPair p{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), 0.0};
    if (!parse_number(trim(std::string_view(line).substr(t2 + 1)), p.gold_score) ||
        !std::isfinite(p.gold_score)) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": gold score is not a finite number");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return read_scored_pairs(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_scored_pairs(std::ostream& out, std::span<const ScoredPair> pairs) {
  for (const auto& p : pairs) out << p.sent1 << '\t' << p.sent2 << '\t' << format_round_trip(p.gold_score) << '\n';
}

void write_link_queries_jsonl(std::ostream& out, std::span<const LinkQuery> queries) {
  for (const auto& q : queries) {
    const json obj = {{"head", q.head}, {"relation", q.relation}, {"candidates", q.candidates},
                      {"target", q.target}};
    out << obj.dump() << '\n';
  }
}

void apply_config_value(TrainConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  auto bad = [&]() -> void {
    throw Error(ErrorKind::Config, "invalid value '" + value + "' for " + std::string(key));
  };
  auto real = [&](double& dst) { if (!parse_number(value, dst)) bad(); };
  auto size = [&](std::size_t& dst) { if (!parse_number(value, dst)) bad(); };

  if (key == "tau") real(cfg.tau);
  else if (key == "batch_size") size(cfg.batch_size);
  else if (key == "encoder_lr") real(cfg.encoder_lr);
  else if (key == "relation_lr") real(cfg.relation_lr);
  else if (key == "epochs") size(cfg.epochs);
  else if (key == "eval_every_steps") size(cfg.eval_every_steps);
  else if (key == "per_relation_cap") size(cfg.per_relation_cap);
  else if (key == "seed") { if (!parse_number(value, cfg.seed)) bad(); }
  else if (key == "sub_batch_size") size(cfg.sub_batch_size);
  else if (key == "hard_negatives") {
    if (value == "true" || value == "1") cfg.hard_negatives = true;
    else if (value == "false" || value == "0") cfg.hard_negatives = false;
    else bad();
  } else if (key == "objective") {
    if (value == "relational") cfg.objective = Objective::Relational;
    else if (value == "merged") cfg.objective = Objective::Merged;
    else bad();
  }
  else if (key == "d_in") size(cfg.encoder.d_in);
  else if (key == "d") size(cfg.encoder.d);
  else if (key == "max_len") size(cfg.encoder.max_len);
  else if (key == "min_count") size(cfg.encoder.min_count);
  else throw Error(ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key=value");
    }
    try {
      apply_config_value(base, trim(std::string_view(body).substr(0, eq)),
                         std::string_view(body).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(base);
  return base;
}

TrainConfig read_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_config(in, base);
}

void write_config(std::ostream& out, const TrainConfig& cfg) {
  for (const auto& [k, v] : config_pairs(cfg)) out << k << '=' << v << '\n';
}

ScoreWeights parse_weights(std::string_view text) {
  std::vector<std::pair<std::string, double>> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    const auto eq = item.find('=');
    double w = 0.0;
    if (eq == std::string::npos || eq == 0 || !parse_number(trim(std::string_view(item).substr(eq + 1)), w)) {
      throw Error(ErrorKind::Config, "malformed weight '" + item + "' (expected name=value)");
    }
    out.emplace_back(trim(std::string_view(item).substr(0, eq)), w);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return ScoreWeights(std::move(out));
}

void write_train_log(std::ostream& out, std::span<const TrainLogRecord> log) {
  for (const auto& r : log) {
    json obj = {{"step", r.step}, {"epoch", r.epoch}, {"loss", r.loss}};
    if (r.dev_metric) obj["dev_metric"] = *r.dev_metric;
    out << obj.dump() << '\n';
  }
}

}  // namespace rse
