#include "randopt/instance_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include "randopt/combinatorics.hpp"
#include "randopt/error.hpp"

namespace randopt {

namespace {

constexpr std::array<char, 8> kMagic = {'R', 'A', 'N', 'D', 'O', 'P', 'T', '\0'};

class Writer {
 public:
  template <class T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::is_same_v<T, double>) {
      put(std::bit_cast<std::uint64_t>(value));
    } else {
      using U = std::make_unsigned_t<T>;
      auto u = static_cast<U>(value);
      for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
  }
  void put_bytes(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(get<std::uint64_t>(what));
    } else {
      using U = std::make_unsigned_t<T>;
      need(sizeof(T), what);
      U u = 0;
      for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
      pos_ += sizeof(T);
      return static_cast<T>(u);
    }
  }
  std::span<const std::uint8_t> get_bytes(std::size_t count, const char* what) {
    need(count, what);
    auto out = bytes_.subspan(pos_, count);
    pos_ += count;
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t count, const char* what) const {
    if (bytes_.size() - pos_ < count)
      throw ParseError(ParseErrorKind::kTruncated, std::string("truncated instance while reading ") + what);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_provenance(Writer& w, const Provenance& prov) {
  w.put(prov.seed);
  w.put(static_cast<std::uint32_t>(prov.label.size()));
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(prov.label.data()), prov.label.size()});
}

Provenance get_provenance(Reader& r) {
  Provenance prov;
  prov.seed = r.get<std::uint64_t>("seed");
  const auto len = r.get<std::uint32_t>("label length");
  auto raw = r.get_bytes(len, "label");
  prov.label.assign(reinterpret_cast<const char*>(raw.data()), raw.size());
  return prov;
}

std::vector<std::uint8_t> graph_payload(const ErGraph& g) {
  const std::uint64_t pairs = static_cast<std::uint64_t>(g.n()) * (g.n() - 1) / 2;
  std::vector<std::uint8_t> out((pairs + 7) / 8, 0);
  std::uint64_t idx = 0;
  for (std::uint32_t j = 1; j < g.n(); ++j)
    for (std::uint32_t i = 0; i < j; ++i, ++idx)
      if (g.has_edge(i, j)) out[idx >> 3] |= static_cast<std::uint8_t>(1U << (idx & 7));
  return out;
}

InstanceKind read_header(Reader& r) {
  auto magic = r.get_bytes(kMagic.size(), "magic");
  if (std::memcmp(magic.data(), kMagic.data(), kMagic.size()) != 0)
    throw ParseError(ParseErrorKind::kCorruptHeader, "bad magic: not a randopt instance file");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kInstanceFormatVersion)
    throw ParseError(ParseErrorKind::kVersionMismatch,
                     "instance format version " + std::to_string(version) + " is not supported");
  const auto tag = r.get<std::uint8_t>("type tag");
  if (tag < 1 || tag > 3) throw ParseError(ParseErrorKind::kCorruptHeader, "unknown type tag " + std::to_string(tag));
  return static_cast<InstanceKind>(tag);
}

void malformed(const std::string& what) { throw ParseError(ParseErrorKind::kMalformed, what); }

}  // namespace

InstanceKind kind_of(const Instance& instance) noexcept {
  return static_cast<InstanceKind>(instance.index() + 1);
}

const char* kind_name(InstanceKind kind) noexcept {
  switch (kind) {
    case InstanceKind::kGraph: return "graph";
    case InstanceKind::kTensor: return "tensor";
    case InstanceKind::kKSat: return "ksat";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_instance(const Instance& instance) {
  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kInstanceFormatVersion);
  w.put(static_cast<std::uint8_t>(kind_of(instance)));
  std::visit(
      [&w](const auto& inst) {
        using T = std::decay_t<decltype(inst)>;
        std::vector<std::uint8_t> payload;
        if constexpr (std::is_same_v<T, ErGraph>) {
          w.put(inst.n());
          w.put(inst.edge_prob());
          w.put(static_cast<std::uint8_t>(inst.avg_degree().has_value()));
          w.put(inst.avg_degree().value_or(0.0));
          put_provenance(w, inst.provenance);
          payload = graph_payload(inst);
        } else if constexpr (std::is_same_v<T, GaussianTensor>) {
          w.put(inst.n);
          w.put(inst.p);
          put_provenance(w, inst.provenance);
          Writer body;
          for (double e : inst.entries) body.put(e);
          payload = body.take();
        } else {
          w.put(inst.n);
          w.put(inst.k);
          w.put(static_cast<std::uint64_t>(inst.m()));
          put_provenance(w, inst.provenance);
          Writer body;
          for (Literal l : inst.literals) body.put(l.dimacs());
          payload = body.take();
        }
        w.put(static_cast<std::uint64_t>(payload.size()));
        w.put_bytes(payload);
      },
      instance);
  return w.take();
}

Instance decode_instance(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const InstanceKind kind = read_header(r);
  Instance out;
  switch (kind) {
    case InstanceKind::kGraph: {
      const auto n = r.get<std::uint32_t>("n");
      const auto prob = r.get<double>("edge probability");
      const auto has_d = r.get<std::uint8_t>("degree flag");
      const auto d = r.get<double>("average degree");
      if (n < 1 || !(prob >= 0.0 && prob <= 1.0)) malformed("invalid graph parameters");
      ErGraph g(n, prob, has_d ? std::optional<double>(d) : std::nullopt);
      g.provenance = get_provenance(r);
      const auto len = r.get<std::uint64_t>("payload length");
      const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
      if (len != (pairs + 7) / 8) malformed("graph payload length does not match n");
      auto payload = r.get_bytes(len, "graph payload");
      std::uint64_t idx = 0;
      for (std::uint32_t j = 1; j < n; ++j)
        for (std::uint32_t i = 0; i < j; ++i, ++idx)
          if ((payload[idx >> 3] >> (idx & 7)) & 1U) g.set_edge(i, j, true);
      out = std::move(g);
      break;
    }
    case InstanceKind::kTensor: {
      GaussianTensor t;
      t.n = r.get<std::uint32_t>("n");
      t.p = r.get<std::uint32_t>("p");
      if (t.p < 2 || t.p > t.n) malformed("invalid tensor parameters");
      t.provenance = get_provenance(r);
      const auto len = r.get<std::uint64_t>("payload length");
      if (len != binomial(t.n, t.p) * 8) malformed("tensor payload length does not match C(n, p)");
      Reader body(r.get_bytes(len, "tensor payload"));
      t.entries.resize(len / 8);
      for (double& e : t.entries) {
        e = body.get<double>("entry");
        if (!std::isfinite(e)) malformed("non-finite tensor entry");
      }
      out = std::move(t);
      break;
    }
    case InstanceKind::kKSat: {
      KSatFormula f;
      f.n = r.get<std::uint32_t>("n");
      f.k = r.get<std::uint32_t>("K");
      const auto m = r.get<std::uint64_t>("m");
      if (f.k < 1 || f.k > f.n) malformed("invalid K-SAT parameters");
      f.provenance = get_provenance(r);
      const auto len = r.get<std::uint64_t>("payload length");
      if (len != m * f.k * 4) malformed("K-SAT payload length does not match m * K");
      Reader body(r.get_bytes(len, "clause payload"));
      f.literals.resize(m * f.k);
      for (Literal& l : f.literals) {
        l = Literal::from_dimacs(body.get<std::int32_t>("literal"));
        if (l.var() < 1 || l.var() > f.n) malformed("literal variable out of range");
      }
      out = std::move(f);
      break;
    }
  }
  if (r.remaining() != 0) malformed("trailing bytes after payload");
  return out;
}

template <class T>
T decode_instance_as(std::span<const std::uint8_t> bytes) {
  Instance inst = decode_instance(bytes);
  if (auto* value = std::get_if<T>(&inst)) return std::move(*value);
  throw ParseError(ParseErrorKind::kTypeMismatch,
                   std::string("instance is a ") + kind_name(kind_of(inst)) + ", not the requested kind");
}

template ErGraph decode_instance_as<ErGraph>(std::span<const std::uint8_t>);
template GaussianTensor decode_instance_as<GaussianTensor>(std::span<const std::uint8_t>);
template KSatFormula decode_instance_as<KSatFormula>(std::span<const std::uint8_t>);

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(std::string_view(buf.str()));
}

std::string content_hash(const Instance& instance) { return sha256_hex(encode_instance(instance)); }

nlohmann::json instance_metadata(const Instance& instance) {
  nlohmann::json meta;
  meta["kind"] = kind_name(kind_of(instance));
  meta["version"] = kInstanceFormatVersion;
  std::visit(
      [&meta](const auto& inst) {
        using T = std::decay_t<decltype(inst)>;
        nlohmann::json params;
        if constexpr (std::is_same_v<T, ErGraph>) {
          params["n"] = inst.n();
          params["edge_prob"] = inst.edge_prob();
          if (inst.avg_degree()) params["d"] = *inst.avg_degree();
          params["edges"] = inst.edge_count();
        } else if constexpr (std::is_same_v<T, GaussianTensor>) {
          params["n"] = inst.n;
          params["p"] = inst.p;
        } else {
          params["n"] = inst.n;
          params["K"] = inst.k;
          params["m"] = inst.m();
        }
        meta["params"] = params;
        meta["seed"] = inst.provenance.seed;
        meta["label"] = inst.provenance.label;
      },
      instance);
  meta["sha256"] = content_hash(instance);
  return meta;
}

std::string write_instance_file(const std::filesystem::path& stem, const Instance& instance) {
  const auto bytes = encode_instance(instance);
  auto bin_path = stem;
  bin_path += ".rinst";
  auto json_path = stem;
  json_path += ".json";
  {
    std::ofstream out(bin_path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + bin_path.string());
  }
  auto meta = instance_metadata(instance);
  std::ofstream out(json_path);
  out << meta.dump(2) << '\n';
  if (!out) throw Error("cannot write " + json_path.string());
  return meta["sha256"].get<std::string>();
}

Instance read_instance_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_instance(bytes);
}

void write_edge_list(std::ostream& out, const ErGraph& graph) {
  out << graph.n() << ' ' << graph.edge_count() << '\n';
  for (std::uint32_t i = 0; i < graph.n(); ++i)
    for (std::uint32_t j = i + 1; j < graph.n(); ++j)
      if (graph.has_edge(i, j)) out << i << ' ' << j << '\n';
}

void write_dimacs(std::ostream& out, const KSatFormula& formula) {
  out << "c randopt K=" << formula.k << " seed=" << formula.provenance.seed << '\n';
  out << "p cnf " << formula.n << ' ' << formula.m() << '\n';
  for (std::size_t j = 0; j < formula.m(); ++j) {
    for (Literal l : formula.clause(j)) out << l.dimacs() << ' ';
    out << "0\n";
  }
}

KSatFormula read_dimacs(std::istream& in) {
  KSatFormula f;
  std::string line;
  bool have_header = false;
  std::size_t declared_m = 0;
  std::vector<Literal> current;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'c' || line[0] == '%') continue;
    std::istringstream ls(line);
    if (line[0] == 'p') {
      std::string p, cnf;
      ls >> p >> cnf >> f.n >> declared_m;
      if (!ls || cnf != "cnf") throw ParseError(ParseErrorKind::kCorruptHeader, "bad DIMACS problem line");
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(ParseErrorKind::kCorruptHeader, "clause before DIMACS problem line");
    std::int32_t code;
    while (ls >> code) {
      if (code == 0) {
        if (f.k == 0) f.k = static_cast<std::uint32_t>(current.size());
        if (current.size() != f.k || f.k == 0)
          throw ParseError(ParseErrorKind::kMalformed, "DIMACS clauses must share one width");
        f.literals.insert(f.literals.end(), current.begin(), current.end());
        current.clear();
      } else {
        const Literal l = Literal::from_dimacs(code);
        if (l.var() > f.n) throw ParseError(ParseErrorKind::kMalformed, "DIMACS literal out of range");
        current.push_back(l);
      }
    }
  }
  if (!have_header) throw ParseError(ParseErrorKind::kCorruptHeader, "missing DIMACS problem line");
  if (!current.empty()) throw ParseError(ParseErrorKind::kTruncated, "unterminated DIMACS clause");
  if (f.m() != declared_m) throw ParseError(ParseErrorKind::kTruncated, "DIMACS clause count differs from header");
  if (declared_m == 0 && f.k == 0) f.k = 1;
  return f;
}

}  // namespace randopt
