#include "cmi/corpus/synthetic.hpp"

#include <cctype>
#include <map>

#include "cmi/common/error.hpp"
#include "cmi/common/rng.hpp"

namespace cmi::corpus {

namespace {

const std::vector<std::string> kSharedNouns = {"item", "entry", "record", "value", "element",
                                               "field", "key", "line", "token", "chunk"};
const std::vector<std::string> kSharedAttrs = {"name", "size", "count", "index", "weight",
                                               "status", "kind", "score", "level", "label"};
const std::vector<std::string> kParams = {"limit", "threshold", "cutoff", "minimum", "bound",
                                          "target", "offset", "margin"};
const std::vector<std::string> kStringOps = {"strip", "lower", "upper", "title"};
const std::vector<std::string> kSeparators = {",", ";", "|", ":", "\\t"};

constexpr int kNumTemplates = 10;

struct Draw {
  Rng& rng;
  const std::string& Pick(const std::vector<std::string>& pool) const {
    return pool[UniformIndex(rng, pool.size())];
  }
  int Int(int lo, int hi) const { return lo + static_cast<int>(UniformIndex(rng, hi - lo + 1)); }
  bool Coin(double p) const { return Uniform01(rng) < p; }
};

std::string Plural(const std::string& noun) {
  if (noun.empty()) return noun;
  if (noun.back() == 'y' && noun.size() > 1 && std::string("aeiou").find(noun[noun.size() - 2]) == std::string::npos)
    return noun.substr(0, noun.size() - 1) + "ies";
  if (noun.back() == 's' || noun.back() == 'x' || noun.ends_with("ch") || noun.ends_with("sh"))
    return noun + "es";
  return noun + "s";
}

std::string Camel(const std::string& a, const std::string& b) {
  std::string out;
  for (const auto* w : {&a, &b}) {
    if (w->empty()) continue;
    out += static_cast<char>(std::toupper(static_cast<unsigned char>((*w)[0])));
    out += w->substr(1);
  }
  return out;
}

std::string Fill(std::string text, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string pattern = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(pattern, pos)) != std::string::npos) {
      text.replace(pos, pattern.size(), value);
      pos += value.size();
    }
  }
  return text;
}

std::size_t PickTemplate(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double r = Uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (r < weights[i]) return i;
    r -= weights[i];
  }
  return weights.size() - 1;
}

struct Rendered {
  std::string code;
  std::string nl;
};

Rendered Render(std::size_t which, const std::map<std::string, std::string>& v) {
  static const char* kCode[kNumTemplates] = {
      // 0: filtered sum
      "def {fn}({arg}, {param}={n}):\n"
      "    {acc} = 0\n"
      "    for {item} in {arg}:\n"
      "        if {item}.{attr} > {param}:\n"
      "            {acc} += {item}.{attr}\n"
      "    return {acc}\n",
      // 1: comprehension filter
      "def {fn}({arg}, {param}):\n"
      "    return [{item} for {item} in {arg} if {item}.{attr} == {param}]\n",
      // 2: index by attribute
      "def {fn}({arg}):\n"
      "    {acc} = {}\n"
      "    for {item} in {arg}:\n"
      "        {acc}[{item}.{attr}] = {item}\n"
      "    return {acc}\n",
      // 3: file parsing
      "def {fn}(path, encoding=\"utf-8\"):\n"
      "    {acc} = []\n"
      "    with open(path, encoding=encoding) as handle:\n"
      "        for line in handle:\n"
      "            line = line.strip()\n"
      "            if line and not line.startswith(\"{comment}\"):\n"
      "                {acc}.append(line.split(\"{sep}\"))\n"
      "    return {acc}\n",
      // 4: guarded conversion
      "def {fn}(value, default={n}):\n"
      "    try:\n"
      "        return int(value) * {m}\n"
      "    except (TypeError, ValueError):\n"
      "        return default\n",
      // 5: retry loop
      "def {fn}(client, {param}={n}):\n"
      "    attempts = 0\n"
      "    while attempts < {param}:\n"
      "        {acc} = client.{verb2}_{item}()\n"
      "        if {acc} is not None:\n"
      "            return {acc}\n"
      "        attempts += 1\n"
      "    raise RuntimeError(\"{msg}\")\n",
      // 6: small class
      "class {Cls}:\n"
      "    def __init__(self, {attr}, {attr2}={n}):\n"
      "        self.{attr} = {attr}\n"
      "        self.{attr2} = {attr2}\n"
      "\n"
      "    def {fn}(self):\n"
      "        return self.{attr} {op} self.{attr2}\n",
      // 7: arg-best
      "def {fn}({arg}):\n"
      "    if not {arg}:\n"
      "        return None\n"
      "    best = {arg}[0]\n"
      "    for {item} in {arg}[1:]:\n"
      "        if {item}.{attr} {cmp} best.{attr}:\n"
      "            best = {item}\n"
      "    return best\n",
      // 8: formatting
      "def {fn}({item}):\n"
      "    {acc} = \"{prefix}\" + str({item}.{attr})\n"
      "    if len({acc}) > {n}:\n"
      "        {acc} = {acc}[:{n}]\n"
      "    return {acc}.{strop}()\n",
      // 9: frequency table
      "def {fn}({arg}):\n"
      "    counts = {}\n"
      "    for {item} in {arg}:\n"
      "        key = {item}.{attr}\n"
      "        counts[key] = counts.get(key, 0) + 1\n"
      "    return sorted(counts.items(), key=lambda pair: pair[1], reverse=True)[:{n}]\n",
  };
  static const char* kNl[kNumTemplates] = {
      "{open} the total {attr} of the {arg} above the given {param}.",
      "{open} the {arg} whose {attr} equals {param}.",
      "{open} a mapping from {attr} to each of the {arg}.",
      "{open} the {sepname} separated rows of a text file, skipping comments.",
      "{open} the value as an integer scaled by {m}, or the default.",
      "{open} a {item} from the client, retrying up to {param} times.",
      "{open} the {opname} of the {attr} and {attr2} of this {lcls}.",
      "{open} the {item} with the {cmpname} {attr}.",
      "{open} a {strop} label for the {item} {attr}, cut to {n} characters.",
      "{open} the {n} most common {attr} values among the {arg}.",
  };
  return {Fill(kCode[which], v), Fill(kNl[which], v)};
}

}  // namespace

SourceStyle HubStyle() {
  return {
      "hub",
      {"get", "fetch", "load", "compute", "collect", "build", "find", "resolve", "update",
       "validate", "render", "export", "sync", "merge", "apply", "lookup"},
      {"user", "account", "order", "invoice", "payment", "session", "request", "customer",
       "cart", "product", "ticket", "profile", "coupon", "shipment", "review", "address",
       "refund", "subscription"},
      {"amount", "price", "email", "created", "total", "quantity", "currency", "discount",
       "balance", "rating", "expires", "region"},
      {"active", "pending", "recent", "paid", "open", "cached", "local", "primary"},
      {"total", "result", "mapping", "values", "found", "response"},
      {"Returns", "Return", "Gets", "Computes", "Fetches"},
      {1.2, 1.0, 1.0, 0.7, 0.8, 1.0, 1.0, 1.0, 0.9, 0.8},
  };
}

SourceStyle ForgeStyle() {
  return {
      "forge",
      {"calc", "scan", "parse", "emit", "walk", "reduce", "sample", "probe", "trace", "split",
       "pack", "decode", "encode", "score", "align", "prune"},
      {"node", "edge", "graph", "matrix", "vector", "pixel", "frame", "signal", "buffer",
       "packet", "sensor", "layer", "kernel", "tensor", "voxel", "segment", "cluster", "region"},
      {"depth", "width", "height", "offset", "stride", "rank", "degree", "energy", "phase",
       "density", "radius", "channel"},
      {"sparse", "dense", "raw", "noisy", "fused", "masked", "padded", "scaled"},
      {"acc", "out", "buf", "res", "tmp", "seen"},
      {"Compute", "Calculate", "Produce", "Extract", "Derive"},
      {0.9, 1.1, 0.8, 1.1, 1.0, 0.7, 1.0, 1.1, 0.8, 1.1},
  };
}

std::vector<CodeSnippet> GenerateSnippets(const SourceStyle& style, int count, std::uint64_t seed,
                                          std::unordered_set<std::string>& used_names) {
  if (count < 0) throw ConfigError("negative snippet count");
  Rng rng(seed);
  Draw d{rng};
  std::vector<CodeSnippet> out;
  out.reserve(count);
  auto noun = [&] { return d.Coin(0.7) ? d.Pick(style.nouns) : d.Pick(kSharedNouns); };
  auto attr = [&] { return d.Coin(0.7) ? d.Pick(style.attributes) : d.Pick(kSharedAttrs); };

  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > count * 200 + 1000)
      throw SizeError("could not generate enough unique function names", count, out.size());
    const std::string n1 = noun();
    const std::string a1 = attr();
    std::string a2 = attr();
    if (a2 == a1) a2 = a1 + "_limit";
    std::string fn = d.Pick(style.verbs) + "_";
    if (d.Coin(0.5)) fn += d.Pick(style.adjectives) + "_";
    fn += n1;
    const int suffix = d.Int(0, 3);
    if (suffix == 1) fn += "_by_" + a1;
    if (suffix == 2) fn += "_for_" + noun();
    if (suffix == 3) fn += "_" + std::to_string(d.Int(2, 9));
    if (used_names.count(fn)) continue;
    used_names.insert(fn);

    const std::size_t which = PickTemplate(style.template_weights, rng);
    const int cmp = d.Int(0, 1);
    const int op = d.Int(0, 3);
    static const char* kOps[] = {"+", "-", "*", "/"};
    static const char* kOpNames[] = {"sum", "difference", "product", "ratio"};
    const std::string sep = d.Pick(kSeparators);
    std::map<std::string, std::string> vars = {
        {"fn", fn},
        {"item", n1},
        {"arg", Plural(n1)},
        {"attr", a1},
        {"attr2", a2},
        {"acc", d.Pick(style.accumulators)},
        {"param", d.Pick(kParams)},
        {"n", std::to_string(d.Int(2, 99))},
        {"m", std::to_string(d.Int(2, 16))},
        {"verb2", d.Pick(style.verbs)},
        {"msg", "no " + n1 + " after " + d.Pick(kParams)},
        {"Cls", Camel(d.Pick(style.adjectives), n1)},
        {"op", kOps[op]},
        {"opname", kOpNames[op]},
        {"cmp", cmp ? ">" : "<"},
        {"cmpname", cmp ? "largest" : "smallest"},
        {"prefix", a1.substr(0, 3) + "-"},
        {"strop", d.Pick(kStringOps)},
        {"comment", d.Coin(0.5) ? "#" : "//"},
        {"sep", sep},
        {"sepname", sep == "\\t" ? "tab" : "'" + sep + "'"},
        {"open", d.Pick(style.nl_openers)},
    };
    std::string lcls = vars["Cls"];
    for (auto& c : lcls) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    vars["lcls"] = lcls;
    Rendered r = Render(which, vars);

    CodeSnippet s;
    s.id = style.name + "-" + std::to_string(out.size());
    s.code = std::move(r.code);
    s.nl = std::move(r.nl);
    s.language = Language::kPython;
    s.source = style.name;
    out.push_back(std::move(s));
  }
  return out;
}

SyntheticBenchmark GenerateBenchmark(int members, int nonmembers, std::uint64_t seed) {
  std::unordered_set<std::string> names;
  SyntheticBenchmark b;
  b.members.role = MembershipLabel::kMember;
  b.members.tag = "hub";
  b.members.snippets = GenerateSnippets(HubStyle(), members, DeriveSeed(seed, "hub"), names);
  b.nonmembers.role = MembershipLabel::kNonmember;
  b.nonmembers.tag = "forge";
  b.nonmembers.snippets = GenerateSnippets(ForgeStyle(), nonmembers, DeriveSeed(seed, "forge"), names);
  return b;
}

}  // namespace cmi::corpus
