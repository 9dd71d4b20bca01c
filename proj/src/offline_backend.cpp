#include <cctype>
#include "gusnet/offline_backend.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "gusnet/annotator.hpp"
#include "gusnet/text.hpp"
#include "json.hpp"

namespace gusnet {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 6> kNegativeStatements = {
    "All {T} are lazy and dishonest.",
    "{T} always ruin every neighborhood they move into.",
    "Every one of those {T} is a burden on society.",
    "{T} are naturally worse at managing money.",
    "Most {T} are too stupid to hold a real job.",
    "{T} never respect the rules like everyone else does.",
};
constexpr std::array<const char*, 4> kNegativeQuestions = {
    "Why are {T} always so lazy?",
    "Aren't all {T} just dangerous criminals?",
    "Why do {T} never take responsibility for anything?",
    "Isn't it obvious that {T} are worse at everything?",
};
constexpr std::array<const char*, 4> kPositiveStatements = {
    "All {T} are naturally gifted at math.",
    "{T} are always so generous and kind.",
    "Every one of the {T} is born a natural leader.",
    "{T} always make the best parents.",
};
constexpr std::array<const char*, 3> kPositiveQuestions = {
    "Why are all {T} so naturally talented?",
    "Aren't {T} always the most hardworking people?",
    "Why do {T} always make the best friends?",
};
constexpr std::array<const char*, 4> kFairStatements = {
    "Some {T} enjoy cooking, while others prefer to eat out.",
    "Many {T} work in a wide range of professions.",
    "A few {T} in my town volunteer at the local library.",
    "Like anyone else, {T} have different opinions on politics.",
};
constexpr std::array<const char*, 3> kFairQuestions = {
    "What challenges do some {T} face when looking for housing?",
    "How can cities better support {T} who want to start a business?",
    "Which programs have helped {T} in our community?",
};

const std::set<std::string>& quantifiers() {
  static const std::set<std::string> s = {"all", "every", "always", "never", "most"};
  return s;
}
const std::set<std::string>& harsh_words() {
  static const std::set<std::string> s = {
      "lazy",   "dishonest", "ruin",    "burden",    "worse",      "stupid",
      "dangerous", "criminals", "greedy", "useless", "parasites", "inferior"};
  return s;
}
const std::set<std::string>& stereotype_cues() {
  static const std::set<std::string> s = {"naturally", "gifted", "generous", "natural",
                                          "leader",    "best",   "talented", "hardworking"};
  return s;
}

template <std::size_t N>
std::string pick(const std::array<const char*, N>& bank, std::uint64_t h) {
  return bank[h % N];
}

std::string fill(std::string pattern, const std::string& target) {
  const auto pos = pattern.find("{T}");
  if (pos != std::string::npos) pattern.replace(pos, 3, target);
  if (!pattern.empty() && pattern[0] >= 'a' && pattern[0] <= 'z') {
    pattern[0] = static_cast<char>(pattern[0] - 'a' + 'A');
  }
  return pattern;
}

// Marks every target-group phrase of the grid found in `lower`.
std::vector<bool> target_mask(const std::vector<std::string>& lower, const ArgumentGrid& grid) {
  std::vector<bool> mask(lower.size(), false);
  for (const auto& [bias, targets] : grid.targets_by_bias_type) {
    for (const auto& t : targets) {
      const auto tw = split_words(to_lower(t));
      if (tw.empty() || tw.size() > lower.size()) continue;
      for (std::size_t i = 0; i + tw.size() <= lower.size(); ++i) {
        if (std::equal(tw.begin(), tw.end(), lower.begin() + static_cast<std::ptrdiff_t>(i))) {
          for (std::size_t k = 0; k < tw.size(); ++k) mask[i + k] = true;
        }
      }
    }
  }
  return mask;
}

std::vector<Tag> runs_to_tags(const std::vector<bool>& mask) {
  std::vector<Tag> tags(mask.size(), Tag::kO);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) tags[i] = (i > 0 && mask[i - 1]) ? Tag::kI : Tag::kB;
  }
  return tags;
}

bool is_punct_word(const std::string& w) {
  return w.size() == 1 && std::ispunct(static_cast<unsigned char>(w[0]));
}

}  // namespace

std::string offline_generate(const std::string& prompt, const ArgumentGrid& grid) {
  const std::string lower = to_lower(prompt);
  std::string target = "people";
  std::size_t best = 0;
  for (const auto& [bias, targets] : grid.targets_by_bias_type) {
    for (const auto& t : targets) {
      if (t.size() > best && lower.find(to_lower(t)) != std::string::npos) {
        target = t;
        best = t.size();
      }
    }
  }
  const bool question = lower.find("question") != std::string::npos;
  const bool fair = lower.find("yet fair") != std::string::npos ||
                    lower.find("mode: fair") != std::string::npos;
  const bool negative = lower.find("negative") != std::string::npos;
  const std::uint64_t h = fnv1a64(prompt);
  std::string sentence;
  if (fair) {
    sentence = question ? pick(kFairQuestions, h) : pick(kFairStatements, h);
  } else if (negative) {
    sentence = question ? pick(kNegativeQuestions, h) : pick(kNegativeStatements, h);
  } else {
    sentence = question ? pick(kPositiveQuestions, h) : pick(kPositiveStatements, h);
  }
  return json{{"sentence", fill(sentence, target)}}.dump();
}

std::vector<Tag> offline_annotate(const std::vector<std::string>& words, EntityClass entity,
                                  const ArgumentGrid& grid) {
  std::vector<std::string> lower;
  for (const auto& w : words) lower.push_back(to_lower(w));
  const auto targets = target_mask(lower, grid);
  std::vector<bool> gen(words.size(), false);
  for (std::size_t i = 0; i < words.size(); ++i) {
    gen[i] = targets[i] || quantifiers().count(lower[i]) > 0;
  }
  if (entity == EntityClass::kGen) return runs_to_tags(gen);

  std::vector<bool> harsh(words.size(), false);
  for (std::size_t i = 0; i < words.size(); ++i) harsh[i] = harsh_words().count(lower[i]) > 0;
  if (entity == EntityClass::kUnfair) return runs_to_tags(harsh);

  // Stereotype: from the first generalization span that holds a target group
  // to the last non-punctuation word, in sentences carrying a bias cue.
  bool cue = false;
  for (std::size_t i = 0; i < words.size(); ++i) {
    cue = cue || quantifiers().count(lower[i]) || harsh[i] || stereotype_cues().count(lower[i]);
  }
  std::vector<Tag> tags(words.size(), Tag::kO);
  const auto first_target = std::find(targets.begin(), targets.end(), true);
  if (!cue || first_target == targets.end()) return tags;
  std::size_t start = static_cast<std::size_t>(first_target - targets.begin());
  while (start > 0 && gen[start - 1]) --start;
  std::size_t end = words.size();
  while (end > start && is_punct_word(words[end - 1])) --end;
  if (end - start < 2) return tags;
  tags[start] = Tag::kB;
  for (std::size_t i = start + 1; i < end; ++i) tags[i] = Tag::kI;
  return tags;
}

std::shared_ptr<ChatTransport> make_offline_backend(const ArgumentGrid& grid,
                                                    OfflineBackendOptions options) {
  auto handler = [grid, options](const std::string& request_json) -> HttpResponse {
    json req = json::parse(request_json, nullptr, false);
    if (req.is_discarded() || !req.contains("messages")) return {400, "bad request", {}};
    std::string system;
    std::vector<std::string> user;
    for (const auto& m : req["messages"]) {
      const auto role = m.value("role", "");
      if (role == "system") system += m.value("content", "");
      if (role == "user") user.push_back(m.value("content", ""));
    }
    if (user.empty()) return {400, "no user message", {}};
    const std::string& first = user.front();
    const auto words_at = first.find("Words: ");
    if (words_at == std::string::npos) {
      return {200, make_chat_response(offline_generate(first, grid)), {}};
    }
    const auto line_end = first.find('\n', words_at);
    json words_doc = json::parse(first.substr(words_at + 7, line_end == std::string::npos
                                                                ? std::string::npos
                                                                : line_end - words_at - 7),
                                 nullptr, false);
    if (words_doc.is_discarded()) return {200, make_chat_response("not json"), {}};
    const auto words = words_doc.get<std::vector<std::string>>();
    EntityClass entity = EntityClass::kGen;
    for (EntityClass c : kEntityClasses) {
      if (system.find("Entity labels: " + tag_name(Tag::kB, c)) != std::string::npos) entity = c;
    }
    auto tags = offline_annotate(words, entity, grid);
    json out = json::array();
    for (Tag t : tags) out.push_back(tag_name(t, entity));
    if (options.misalign_every > 0 && user.size() == 1 && !out.empty() &&
        fnv1a64(first + std::string(entity_code(entity))) %
                static_cast<std::uint64_t>(options.misalign_every) ==
            0) {
      out.erase(out.end() - 1);
    }
    return {200, make_chat_response(json{{"tags", out}}.dump()), {}};
  };
  return std::make_shared<CallbackTransport>("stub", handler);
}

}  // namespace gusnet
