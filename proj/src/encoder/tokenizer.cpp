#include "cmi/encoder/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "cmi/common/error.hpp"

namespace cmi::encoder {

namespace {

enum class CharClass { kWord, kSpace, kPunct };

CharClass Classify(unsigned char c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
    return CharClass::kSpace;
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
      c >= 0x80)
    return CharClass::kWord;
  return CharClass::kPunct;
}

std::uint64_t PairKey(int left, int right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

const char* kSpecialNames[kNumSpecialTokens] = {"<pad>", "<cls>", "<sep>", "<eos>", "<mask>"};

std::string Escape(const std::string& bytes) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c <= 0x20 || c >= 0x7f) {
      out += "\\x";
      out += hex[c >> 4];
      out += hex[c & 15];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string Unescape(const std::string& text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (i + 1 < text.size() && text[i + 1] == '\\') {
      out += '\\';
      ++i;
    } else if (i + 3 < text.size() && text[i + 1] == 'x') {
      out += static_cast<char>(std::stoi(text.substr(i + 2, 2), nullptr, 16));
      i += 3;
    } else {
      throw ParseError("tokenizer", 0, "bad escape in token '" + text + "'");
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> PreTokenize(std::string_view text) {
  std::vector<std::string> pieces;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const CharClass cls = Classify(static_cast<unsigned char>(text[i]));
    std::size_t j = i + 1;
    if (cls == CharClass::kSpace) {
      while (j < n && Classify(static_cast<unsigned char>(text[j])) == CharClass::kSpace) ++j;
      // Leave a trailing ' ' to lead the next piece.
      if (j < n && text[j - 1] == ' ') {
        if (j - 1 > i) pieces.emplace_back(text.substr(i, j - 1 - i));
        i = j - 1;
        const CharClass next = Classify(static_cast<unsigned char>(text[j]));
        std::size_t k = j + 1;
        while (k < n && Classify(static_cast<unsigned char>(text[k])) == next) ++k;
        pieces.emplace_back(text.substr(i, k - i));
        i = k;
        continue;
      }
    } else {
      while (j < n && Classify(static_cast<unsigned char>(text[j])) == cls) ++j;
    }
    pieces.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return pieces;
}

Tokenizer::Tokenizer() {
  tokens_.reserve(kFirstMergeId);
  for (int s = 0; s < kNumSpecialTokens; ++s) tokens_.emplace_back(kSpecialNames[s]);
  for (int b = 0; b < 256; ++b) tokens_.emplace_back(1, static_cast<char>(b));
}

void Tokenizer::AddMerge(int left, int right) {
  merge_rank_.emplace(PairKey(left, right), static_cast<int>(merges_.size()));
  merges_.emplace_back(left, right);
  tokens_.push_back(tokens_[left] + tokens_[right]);
}

Tokenizer Tokenizer::Train(std::span<const corpus::CodeSnippet> corpus, int vocab_size) {
  if (corpus.empty()) throw ConfigError("tokenizer training corpus is empty");
  if (vocab_size < kMinVocabSize)
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " is below the minimum " +
                      std::to_string(kMinVocabSize));

  std::map<std::string, long> counts;
  for (const auto& s : corpus) {
    for (auto& p : PreTokenize(s.code)) ++counts[p];
    if (s.nl)
      for (auto& p : PreTokenize(*s.nl)) ++counts[p];
  }
  std::vector<std::vector<int>> words;
  std::vector<long> freq;
  words.reserve(counts.size());
  for (const auto& [piece, c] : counts) {
    std::vector<int> sym;
    sym.reserve(piece.size());
    for (unsigned char ch : piece) sym.push_back(kByteBase + ch);
    words.push_back(std::move(sym));
    freq.push_back(c);
  }

  Tokenizer tok;
  std::unordered_map<std::uint64_t, long> pair_counts;
  while (tok.vocab_size() < vocab_size) {
    pair_counts.clear();
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& sym = words[w];
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) pair_counts[PairKey(sym[i], sym[i + 1])] += freq[w];
    }
    std::uint64_t best = 0;
    long best_count = 0;
    for (const auto& [key, c] : pair_counts) {
      if (c > best_count || (c == best_count && key < best)) {
        best = key;
        best_count = c;
      }
    }
    if (best_count < 2) break;
    const int left = static_cast<int>(best >> 32);
    const int right = static_cast<int>(best & 0xffffffffu);
    const int merged = tok.vocab_size();
    tok.AddMerge(left, right);
    for (auto& sym : words) {
      if (sym.size() < 2) continue;
      std::size_t out = 0;
      for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
          sym[out++] = merged;
          ++i;
        } else {
          sym[out++] = sym[i];
        }
      }
      sym.resize(out);
    }
  }
  return tok;
}

void Tokenizer::EncodeWord(std::string_view word, std::vector<int>& out) const {
  std::vector<int> sym;
  sym.reserve(word.size());
  for (unsigned char ch : word) sym.push_back(kByteBase + ch);
  while (sym.size() > 1) {
    int best_rank = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      auto it = merge_rank_.find(PairKey(sym[i], sym[i + 1]));
      if (it != merge_rank_.end()) best_rank = std::min(best_rank, it->second);
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    const auto [left, right] = merges_[best_rank];
    const int merged = kFirstMergeId + best_rank;
    std::size_t w = 0;
    for (std::size_t i = 0; i < sym.size(); ++i) {
      if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
        sym[w++] = merged;
        ++i;
      } else {
        sym[w++] = sym[i];
      }
    }
    sym.resize(w);
  }
  out.insert(out.end(), sym.begin(), sym.end());
}

std::vector<int> Tokenizer::Tokenize(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& piece : PreTokenize(text)) EncodeWord(piece, ids);
  return ids;
}

std::string Tokenizer::Detokenize(std::span<const int> ids) const {
  std::string out;
  for (int id : ids)
    if (id >= kByteBase && id < vocab_size()) out += tokens_[id];
  return out;
}

std::vector<int> Tokenizer::EncodeInput(std::string_view code, const std::optional<std::string>& nl,
                                        int max_positions) const {
  if (code.empty()) throw InputError("code text is empty");
  std::vector<int> code_ids = Tokenize(code);
  std::vector<int> out;
  if (!nl) {
    if (max_positions < 3) throw ConfigError("max_positions too small for [CLS] x [EOS]");
    const std::size_t budget = static_cast<std::size_t>(max_positions) - 2;
    if (code_ids.size() > budget) code_ids.resize(budget);
    out.reserve(code_ids.size() + 2);
    out.push_back(kCls);
    out.insert(out.end(), code_ids.begin(), code_ids.end());
    out.push_back(kEos);
    return out;
  }
  if (max_positions < 4) throw ConfigError("max_positions too small for the bimodal layout");
  std::vector<int> nl_ids = Tokenize(*nl);
  const std::size_t budget = static_cast<std::size_t>(max_positions) - 3;
  const std::size_t room = budget > code_ids.size() ? budget - code_ids.size() : 0;
  if (nl_ids.size() > room) nl_ids.resize(room);
  if (code_ids.size() > budget - nl_ids.size()) code_ids.resize(budget - nl_ids.size());
  out.reserve(nl_ids.size() + code_ids.size() + 3);
  out.push_back(kCls);
  out.insert(out.end(), nl_ids.begin(), nl_ids.end());
  out.push_back(kSep);
  out.insert(out.end(), code_ids.begin(), code_ids.end());
  out.push_back(kEos);
  return out;
}

void Tokenizer::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream vocab(dir / "vocab.txt");
  for (int id = 0; id < vocab_size(); ++id) vocab << id << '\t' << Escape(tokens_[id]) << '\n';
  std::ofstream merges(dir / "merges.txt");
  // Merges are keyed by id: two merges may spell the same byte string.
  merges << "#version: cmi-bpe 1\n";
  for (const auto& [l, r] : merges_)
    merges << l << ' ' << r << '\t' << Escape(tokens_[l]) << ' ' << Escape(tokens_[r]) << '\n';
  if (!vocab || !merges) throw IoError("failed writing tokenizer to " + dir.string());
}

Tokenizer Tokenizer::Load(const std::filesystem::path& dir) {
  std::ifstream merges(dir / "merges.txt");
  if (!merges) throw IoError("cannot open " + (dir / "merges.txt").string());
  Tokenizer tok;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(merges, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line.substr(0, line.find('\t')));
    int left = -1;
    int right = -1;
    if (!(fields >> left >> right))
      throw ParseError((dir / "merges.txt").string(), lineno, "expected 'left_id right_id'");
    if (left < kByteBase || right < kByteBase || left >= tok.vocab_size() ||
        right >= tok.vocab_size())
      throw ParseError((dir / "merges.txt").string(), lineno, "merge refers to an unknown token");
    tok.AddMerge(left, right);
  }
  std::ifstream vocab(dir / "vocab.txt");
  if (vocab) {
    lineno = 0;
    while (std::getline(vocab, line)) {
      ++lineno;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      const int id = std::stoi(line.substr(0, tab));
      if (id >= kByteBase && (id >= tok.vocab_size() || tok.tokens_[id] != Unescape(line.substr(tab + 1))))
        throw ParseError((dir / "vocab.txt").string(), lineno, "vocab disagrees with merges");
    }
  }
  return tok;
}

}  // namespace cmi::encoder
