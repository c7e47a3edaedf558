#include "dsner/synthetic.hpp"

#include <array>
#include <set>
#include <sstream>
#include <string_view>

#include "dsner/errors.hpp"
#include "dsner/rng.hpp"

namespace dsner {
namespace {

constexpr std::array<std::string_view, 14> kFirstNames = {
    "Anna", "Boris", "Carla", "Dmitri", "Elena", "Felix", "Greta",
    "Hugo", "Ines",  "Jonas", "Klara",  "Lukas", "Marta", "Nils"};
constexpr std::array<std::string_view, 14> kLastNames = {
    "Adler", "Berg",  "Costa", "Dahl", "Engel", "Fischer", "Garcia",
    "Horvat", "Ivanov", "Jansen", "Kovac", "Lind", "Moreau", "Novak"};
constexpr std::array<std::string_view, 36> kPlaces = {
    "Aldport",  "Brenmoor", "Calvik",   "Dunmere",  "Eskaton",  "Farrow",   "Glenhollow",
    "Harrowgate", "Istrenna", "Jorvale", "Kestrel",  "Lowmarsh", "Mirefield", "Northam",
    "Orrin",    "Pellmark", "Quarry",   "Redwater", "Saltcombe", "Thornby", "Ulverton",
    "Valdora",  "Westfell", "Yarrow",   "Zennor",   "Ashby",    "Bramwell", "Corvin",
    "Deepdale", "Elmstead", "Fenwick",  "Gorran",   "Hallam",   "Ivybridge", "Kelso", "Lanark"};
constexpr std::array<std::string_view, 16> kCompanyStems = {
    "Acme",   "Borealis", "Cobalt", "Dynamo", "Ember",  "Fulcrum", "Granite", "Helix",
    "Ionic",  "Juniper",  "Keystone", "Lumen", "Meridian", "Nimbus", "Onyx",   "Pinnacle"};
constexpr std::array<std::string_view, 3> kCompanySuffixes = {"Corp", "Group", "Bank"};

// Common noun phrases that can stand in any entity slot ("the minister
// said", "in the capital"). They are never annotated.
constexpr std::array<std::string_view, 16> kFillers = {
    "the minister", "the company", "the capital",  "local officials",
    "the board",    "a spokesman", "the region",   "the lender",
    "his brother",  "the firm",    "the province", "the council",
    "the mayor",    "the town",    "the investors", "the agency"};

constexpr std::array<std::string_view, 16> kTemplates = {
    "{PER} said the {ORG} office in {LOC} would close .",
    "{PER} , chief of {ORG} , arrived in {LOC} on monday .",
    "shares of {ORG} rose after {PER} spoke .",
    "{PER} met {PER} in {LOC} .",
    "the summit in {LOC} ended without a deal .",
    "{ORG} hired {PER} as director .",
    "officials from {LOC} and {LOC} signed the treaty .",
    "prices fell sharply last week .",
    "{PER} was born in {LOC} .",
    "{ORG} and {ORG} agreed to merge .",
    "police in {LOC} arrested two men on friday .",
    "according to {PER} , the {ORG} plan is ready .",
    "the new factory near {LOC} belongs to {ORG} .",
    "{PER} told reporters that talks would resume .",
    "analysts expect {ORG} to report higher profits .",
    "heavy rain hit {LOC} and the nearby villages ."};

struct FormPools {
  std::vector<std::vector<std::string>> per, loc, org;
};

FormPools make_pools(std::size_t per_type, Rng& rng) {
  FormPools pools;
  std::vector<std::pair<std::size_t, std::size_t>> names;
  for (std::size_t a = 0; a < kFirstNames.size(); ++a)
    for (std::size_t b = 0; b < kLastNames.size(); ++b) names.emplace_back(a, b);
  rng.shuffle(names);
  std::vector<std::size_t> places(kPlaces.size());
  for (std::size_t k = 0; k < places.size(); ++k) places[k] = k;
  rng.shuffle(places);
  std::vector<std::pair<std::size_t, std::size_t>> companies;
  for (std::size_t a = 0; a < kCompanyStems.size(); ++a)
    for (std::size_t b = 0; b < kCompanySuffixes.size(); ++b) companies.emplace_back(a, b);
  rng.shuffle(companies);

  if (per_type > places.size() || per_type > companies.size() || per_type > names.size())
    throw InputError("synthetic: too many forms per type requested");
  for (std::size_t k = 0; k < per_type; ++k) {
    pools.per.push_back({std::string(kFirstNames[names[k].first]),
                         std::string(kLastNames[names[k].second])});
    pools.loc.push_back({std::string(kPlaces[places[k]])});
    pools.org.push_back({std::string(kCompanyStems[companies[k].first]),
                         std::string(kCompanySuffixes[companies[k].second])});
  }
  return pools;
}

Corpus generate(std::size_t count, const FormPools& pools, double filler_rate, Rng& rng,
                Split split, const std::string& prefix) {
  Corpus corpus;
  corpus.split = split;
  for (std::size_t s = 0; s < count; ++s) {
    std::istringstream words{std::string(kTemplates[rng.below(kTemplates.size())])};
    Sentence sentence;
    sentence.id = prefix + std::to_string(s);
    std::vector<LabeledSpan> spans;
    std::string word;
    while (words >> word) {
      const std::vector<std::vector<std::string>>* pool = nullptr;
      std::string type;
      if (word == "{PER}") pool = &pools.per, type = "PER";
      else if (word == "{LOC}") pool = &pools.loc, type = "LOC";
      else if (word == "{ORG}") pool = &pools.org, type = "ORG";
      if (!pool) {
        sentence.tokens.push_back(word);
        continue;
      }
      if (rng.bernoulli(filler_rate)) {
        std::istringstream filler{std::string(kFillers[rng.below(kFillers.size())])};
        for (std::string t; filler >> t;) sentence.tokens.push_back(t);
        continue;
      }
      const auto& form = (*pool)[rng.below(pool->size())];
      const std::size_t start = sentence.tokens.size();
      sentence.tokens.insert(sentence.tokens.end(), form.begin(), form.end());
      spans.push_back({start, sentence.tokens.size() - 1, type, Provenance::Gold});
    }
    corpus.add(std::move(sentence), std::move(spans));
  }
  return corpus;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& config) {
  if (!(config.filler_rate >= 0.0 && config.filler_rate <= 1.0))
    throw InputError("synthetic: filler_rate must lie in [0, 1]");
  Rng pool_rng(derive_seed(config.seed, 0));
  const auto pools = make_pools(config.forms_per_type, pool_rng);
  Rng train_rng(derive_seed(config.seed, 1));
  Rng dev_rng(derive_seed(config.seed, 2));
  Rng test_rng(derive_seed(config.seed, 3));
  SyntheticData data;
  data.train = generate(config.train_sentences, pools, config.filler_rate, train_rng, Split::Train, "train-");
  data.dev = generate(config.dev_sentences, pools, config.filler_rate, dev_rng, Split::Dev, "dev-");
  data.test = generate(config.test_sentences, pools, config.filler_rate, test_rng, Split::Test, "test-");
  return data;
}

}  // namespace dsner
