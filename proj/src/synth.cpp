#include "lfkit/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lfkit/audit.hpp"
#include "lfkit/dataset_io.hpp"
#include "lfkit/parallel.hpp"
#include "lfkit/rng.hpp"

namespace lfkit {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(AgeDistribution d) {
  return d == AgeDistribution::uniform ? "uniform" : "morph_like";
}

std::optional<AgeDistribution> parse_age_distribution(std::string_view text) {
  if (text == "uniform") return AgeDistribution::uniform;
  if (text == "morph_like") return AgeDistribution::morph_like;
  return std::nullopt;
}

std::string_view to_string(Injection i) {
  switch (i) {
    case Injection::none: return "none";
    case Injection::gender_flip: return "gender_flip";
    case Injection::race_flip: return "race_flip";
    case Injection::dob_small_majority: return "dob_small_majority";
    case Injection::dob_small_spread: return "dob_small_spread";
    case Injection::dob_large: return "dob_large";
    case Injection::gender_tie: return "gender_tie";
    case Injection::race_tie: return "race_tie";
  }
  return "";
}

std::vector<CellShare> GenSpec::default_shares() {
  return {
      {Race::black, Gender::male, 8838}, {Race::white, Gender::male, 2070},
      {Race::asian, Gender::male, 49},   {Race::hispanic, Gender::male, 517},
      {Race::other, Gender::male, 15},   {Race::black, Gender::female, 1494},
      {Race::white, Gender::female, 634}, {Race::asian, Gender::female, 6},
      {Race::hispanic, Gender::female, 30}, {Race::other, Gender::female, 5},
  };
}

void GenSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::config_error, m); };
  if (subject_count == 0) fail("subject_count must be positive");
  if (!(mean_arrests >= 1.0)) fail("mean_arrests must be >= 1");
  if (max_arrests == 0 || max_arrests > 99) fail("max_arrests must be in [1, 99]");
  if (first_year > last_year) fail("first_year is after last_year");
  double total = 0.0;
  for (const auto& c : cells) {
    if (!(c.weight >= 0.0)) fail("cell weights must be non-negative");
    total += c.weight;
  }
  if (!(total > 0.0)) fail("cell weights sum to zero");
  const double rates[] = {this->rates.gender_flip, this->rates.race_flip, this->rates.dob_small,
                          this->rates.dob_large,   this->rates.gender_tie, this->rates.race_tie,
                          this->rates.dob_small_spread_fraction};
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) fail("injection rates must lie in [0, 1]");
  }
  const double injected = this->rates.gender_flip + this->rates.race_flip + this->rates.dob_small +
                          this->rates.dob_large + this->rates.gender_tie + this->rates.race_tie;
  if (single_image && injected > 0.0) fail("single_image corpora cannot carry conflicts");
  if (injected > 1.0) fail("injection rates sum above 1");
  if (max_arrests < 4 && injected > 0.0) fail("injections need max_arrests >= 4");
}

ordered_json GenSpec::to_json() const {
  ordered_json j;
  j["subject_count"] = subject_count;
  j["mean_arrests"] = mean_arrests;
  j["max_arrests"] = max_arrests;
  j["single_image"] = single_image;
  ordered_json cj = ordered_json::array();
  for (const auto& c : cells) {
    cj.push_back({{"cell", std::string{code(c.race), code(c.gender)}}, {"weight", c.weight}});
  }
  j["cells"] = cj;
  j["age_distribution"] = to_string(age_distribution);
  j["rates"] = {{"gender_flip", rates.gender_flip},
                {"race_flip", rates.race_flip},
                {"dob_small", rates.dob_small},
                {"dob_large", rates.dob_large},
                {"gender_tie", rates.gender_tie},
                {"race_tie", rates.race_tie},
                {"dob_small_spread_fraction", rates.dob_small_spread_fraction}};
  j["signal"] = {{"white_offset", signal.white_offset},
                 {"black_offset", signal.black_offset},
                 {"brightness_age_slope", signal.brightness_age_slope},
                 {"brightness_noise_sd", signal.brightness_noise_sd},
                 {"contrast", signal.contrast},
                 {"spot_slope_white", signal.spot_slope_white},
                 {"spot_slope_black", signal.spot_slope_black},
                 {"spot_noise_sd", signal.spot_noise_sd},
                 {"race_dashes", signal.race_dashes},
                 {"female_diagonals", signal.female_diagonals},
                 {"male_diagonals", signal.male_diagonals},
                 {"admixture_spread", signal.admixture_spread}};
  j["seed"] = seed;
  j["first_year"] = first_year;
  j["last_year"] = last_year;
  j["cell_image_targets"] = cell_image_targets;
  return j;
}

void GenSpec::apply_json(const json& j) {
  try {
    auto get = [&](const json& obj, const char* key, auto& field) {
      if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
    };
    get(j, "subject_count", subject_count);
    get(j, "mean_arrests", mean_arrests);
    get(j, "max_arrests", max_arrests);
    get(j, "single_image", single_image);
    get(j, "seed", seed);
    get(j, "first_year", first_year);
    get(j, "last_year", last_year);
    if (j.contains("age_distribution")) {
      const auto d = parse_age_distribution(j.at("age_distribution").get<std::string>());
      if (!d) throw Error(ErrorKind::config_error, "unknown age_distribution");
      age_distribution = *d;
    }
    if (j.contains("cells")) {
      cells.clear();
      for (const auto& c : j.at("cells")) {
        const auto name = c.at("cell").get<std::string>();
        const auto race = name.size() == 2 ? parse_race(name.substr(0, 1)) : std::nullopt;
        const auto gender = name.size() == 2 ? parse_gender(name.substr(1, 1)) : std::nullopt;
        if (!race || !gender) throw Error(ErrorKind::config_error, "bad cell name " + name);
        cells.push_back({*race, *gender, c.at("weight").get<double>()});
      }
    }
    if (j.contains("rates")) {
      const auto& r = j.at("rates");
      get(r, "gender_flip", rates.gender_flip);
      get(r, "race_flip", rates.race_flip);
      get(r, "dob_small", rates.dob_small);
      get(r, "dob_large", rates.dob_large);
      get(r, "gender_tie", rates.gender_tie);
      get(r, "race_tie", rates.race_tie);
      get(r, "dob_small_spread_fraction", rates.dob_small_spread_fraction);
    }
    if (j.contains("signal")) {
      const auto& s = j.at("signal");
      get(s, "white_offset", signal.white_offset);
      get(s, "black_offset", signal.black_offset);
      get(s, "brightness_age_slope", signal.brightness_age_slope);
      get(s, "brightness_noise_sd", signal.brightness_noise_sd);
      get(s, "contrast", signal.contrast);
      get(s, "spot_slope_white", signal.spot_slope_white);
      get(s, "spot_slope_black", signal.spot_slope_black);
      get(s, "spot_noise_sd", signal.spot_noise_sd);
      get(s, "race_dashes", signal.race_dashes);
      get(s, "female_diagonals", signal.female_diagonals);
      get(s, "male_diagonals", signal.male_diagonals);
      get(s, "admixture_spread", signal.admixture_spread);
    }
    if (j.contains("cell_image_targets")) {
      cell_image_targets = j.at("cell_image_targets").get<std::map<std::string, std::size_t>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_error, std::string("generator config: ") + e.what());
  }
}

GenSpec mirror_paper_shape(double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw Error(ErrorKind::config_error, "scale must lie in (0, 1]");
  constexpr double kSubjects = 13617;
  GenSpec spec;
  spec.subject_count = static_cast<std::size_t>(std::llround(kSubjects * scale));
  spec.rates.gender_flip = 1.0 / kSubjects;
  spec.rates.race_flip = 33.0 / kSubjects;
  // 1,779 dob conflicts: 70 beyond a year, 185 of the rest resolved by the mean.
  spec.rates.dob_large = 70.0 / kSubjects;
  spec.rates.dob_small = 1709.0 / kSubjects;
  spec.rates.dob_small_spread_fraction = 185.0 / 1709.0;
  const std::pair<const char*, double> images[] = {
      {"WF", 2570}, {"BF", 5720}, {"WM", 7930}, {"BM", 36690}};
  for (const auto& [cell, n] : images) {
    auto target = static_cast<std::size_t>(std::llround(n * scale));
    // The anchor cell is halved between S1 and S2.
    if (std::string_view(cell) == "WF" && target % 2 == 1) ++target;
    spec.cell_image_targets[cell] = target;
  }
  return spec;
}

GenSpec toy_spec(std::uint64_t seed) {
  GenSpec spec;
  spec.subject_count = 1000;
  spec.single_image = true;
  spec.cells = {{Race::white, Gender::female, 1}, {Race::black, Gender::female, 1},
                {Race::white, Gender::male, 1},   {Race::black, Gender::male, 1}};
  spec.age_distribution = AgeDistribution::uniform;
  spec.seed = seed;
  return spec;
}

std::vector<std::string> GroundTruth::subjects_with(Injection kind) const {
  std::vector<std::string> out;
  for (const auto& s : subjects) {
    if (s.injection == kind) out.push_back(s.subject_id);
  }
  return out;
}

std::string GroundTruth::to_csv(const std::vector<Record>& recs) const {
  std::string out =
      "image_id,subject_id,true_dob,true_gender,true_race,admixture,injection,corrupted,"
      "expected_corrected,true_age\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& t = records[i];
    const auto& s = subjects[t.subject];
    out += fmt::format("{},{},{},{},{},{:.6f},{},{},{},{:.6f}\n", recs[i].image_id, s.subject_id,
                       format_date(s.dob), code(s.gender), code(s.race), s.admixture,
                       to_string(s.injection), t.corrupted ? 1 : 0, static_cast<int>(t.expected),
                       t.true_age);
  }
  return out;
}

namespace {

// Largest-remainder apportionment of n over the weights.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

double draw_age(Rng& rng, AgeDistribution d) {
  if (d == AgeDistribution::uniform) return rng.uniform(16.0, 77.0);
  for (;;) {
    const double a = rng.bernoulli(0.5) ? rng.normal(24.0, 4.0) : rng.normal(42.0, 8.0);
    if (a >= 16.0 && a <= 77.0) return a;
  }
}

bool eligible(Injection kind, std::size_t n) {
  switch (kind) {
    case Injection::dob_large: return n >= 2 && n <= 4;
    case Injection::gender_tie:
    case Injection::race_tie: return n >= 2 && n % 2 == 0;
    case Injection::gender_flip:
    case Injection::race_flip: return n >= 3;
    case Injection::dob_small_majority:
    case Injection::dob_small_spread: return n >= 2;
    case Injection::none: return true;
  }
  return false;
}

// Smallest change of n that satisfies the pattern.
std::size_t make_eligible(Injection kind, std::size_t n) {
  switch (kind) {
    case Injection::dob_large: return std::clamp<std::size_t>(n, 2, 4);
    case Injection::gender_tie:
    case Injection::race_tie: return n < 2 ? 2 : n + (n % 2);
    case Injection::gender_flip:
    case Injection::race_flip: return std::max<std::size_t>(n, 3);
    default: return std::max<std::size_t>(n, 2);
  }
}

Race other_race(Race r, Rng& rng) {
  if (r == Race::white) return Race::black;
  if (r == Race::black) return Race::white;
  std::vector<Race> pool;
  for (auto c : kAllRaces) {
    if (c != r) pool.push_back(c);
  }
  return pool[rng.below(pool.size())];
}

Gender flip(Gender g) { return g == Gender::male ? Gender::female : Gender::male; }

std::vector<std::size_t> pick(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct Streams {
  static constexpr std::uint64_t cells = 1;
  static constexpr std::uint64_t counts = 2;
  static constexpr std::uint64_t injections = 3;
  static constexpr std::uint64_t targets = 4;
  static constexpr std::uint64_t subject = 1ULL << 32;
  static constexpr std::uint64_t image = 1ULL << 40;
};

}  // namespace

Corpus generate(const GenSpec& spec) {
  spec.validate();
  Corpus corpus;
  corpus.spec = spec;
  auto& truth = corpus.truth;
  const std::size_t n_subjects = spec.subject_count;

  // Cell membership by apportionment, then shuffled over subject positions.
  std::vector<double> weights;
  for (const auto& c : spec.cells) weights.push_back(c.weight);
  const auto counts = apportion(n_subjects, weights);
  std::vector<std::size_t> cell_of;
  for (std::size_t c = 0; c < counts.size(); ++c) cell_of.insert(cell_of.end(), counts[c], c);
  {
    Rng rng(mix_seed(spec.seed, Streams::cells));
    rng.shuffle(std::span<std::size_t>(cell_of));
  }

  std::vector<std::size_t> n_records(n_subjects, 1);
  if (!spec.single_image) {
    Rng rng(mix_seed(spec.seed, Streams::counts));
    for (auto& n : n_records) {
      n = std::min<std::size_t>(rng.geometric(1.0 / spec.mean_arrests), spec.max_arrests);
    }
  }

  truth.subjects.resize(n_subjects);
  for (std::size_t i = 0; i < n_subjects; ++i) {
    auto& s = truth.subjects[i];
    s.subject_id = fmt::format("{:06d}", i + 1);
    s.race = spec.cells[cell_of[i]].race;
    s.gender = spec.cells[cell_of[i]].gender;
  }

  // Injection kinds in a fixed order, each on subjects not yet injected. The
  // dob_small draw is split between its two patterns afterwards.
  {
    Rng rng(mix_seed(spec.seed, Streams::injections));
    const std::pair<Injection, double> kinds[] = {
        {Injection::dob_large, spec.rates.dob_large},   {Injection::gender_tie, spec.rates.gender_tie},
        {Injection::race_tie, spec.rates.race_tie},     {Injection::gender_flip, spec.rates.gender_flip},
        {Injection::race_flip, spec.rates.race_flip},   {Injection::dob_small_majority, spec.rates.dob_small},
    };
    for (const auto& [kind, rate] : kinds) {
      const std::size_t k = rate > 0.0 ? rng.binomial(n_subjects, rate) : 0;
      std::vector<std::size_t> pool, fallback;
      for (std::size_t i = 0; i < n_subjects; ++i) {
        if (truth.subjects[i].injection != Injection::none) continue;
        (eligible(kind, n_records[i]) ? pool : fallback).push_back(i);
      }
      std::vector<std::size_t> chosen;
      if (pool.size() >= k) {
        for (auto p : pick(rng, pool.size(), k)) chosen.push_back(pool[p]);
      } else {
        // Too few subjects carry enough records: adjust counts of extra ones.
        chosen = pool;
        for (auto p : pick(rng, fallback.size(), std::min(fallback.size(), k - pool.size()))) {
          const auto i = fallback[p];
          n_records[i] = std::min<std::size_t>(make_eligible(kind, n_records[i]), spec.max_arrests);
          chosen.push_back(i);
        }
      }
      for (auto i : chosen) {
        auto inj = kind;
        if (kind == Injection::dob_small_majority) {
          const auto n = n_records[i];
          const bool spread = n == 2 || (n <= 4 && rng.bernoulli(spec.rates.dob_small_spread_fraction));
          inj = spread ? Injection::dob_small_spread : Injection::dob_small_majority;
        }
        truth.subjects[i].injection = inj;
        ++truth.realized[inj];
      }
      truth.drawn[kind == Injection::dob_small_majority ? "dob_small" : std::string(to_string(kind))] = k;
    }
  }

  // Match go_for_age image totals per cell by nudging uninjected subjects.
  if (!spec.cell_image_targets.empty() && !spec.single_image) {
    Rng rng(mix_seed(spec.seed, Streams::targets));
    for (const auto& [cell, target] : spec.cell_image_targets) {
      std::vector<std::size_t> members;
      std::size_t total = 0;
      for (std::size_t i = 0; i < n_subjects; ++i) {
        const auto& s = truth.subjects[i];
        if (std::string{code(s.race), code(s.gender)} != cell) continue;
        if (s.injection == Injection::dob_large) continue;
        total += n_records[i];
        if (s.injection == Injection::none) members.push_back(i);
      }
      if (members.empty()) continue;
      for (std::size_t guard = 0; total != target && guard < 100 * (target + total); ++guard) {
        const auto i = members[rng.below(members.size())];
        if (total < target && n_records[i] < spec.max_arrests) {
          ++n_records[i];
          ++total;
        } else if (total > target && n_records[i] > 1) {
          --n_records[i];
          --total;
        }
      }
    }
  }

  // Per-subject records under derived seeds.
  const auto first_day = day_number(std::chrono::year{spec.first_year} / 1 / 1);
  const auto last_day = day_number(std::chrono::year{spec.last_year} / 12 / 31);
  std::vector<std::vector<Record>> per_subject(n_subjects);
  std::vector<std::vector<RecordTruth>> per_truth(n_subjects);
  parallel_for(n_subjects, [&](std::size_t i) {
    auto& s = truth.subjects[i];
    Rng rng(mix_seed(spec.seed, Streams::subject + i));
    const auto n = n_records[i];
    std::vector<std::int64_t> days(n);
    for (auto& d : days) d = rng.range(first_day, last_day);
    std::sort(days.begin(), days.end());
    const double age0 = draw_age(rng, spec.age_distribution);
    s.dob = date_from_day_number(days[0] - std::llround(age0 * kDaysPerYear));
    const double u = rng.uniform();
    const double spread = spec.signal.admixture_spread * u * u;
    s.admixture = s.race == Race::white ? 1.0 - spread : s.race == Race::black ? spread : 0.5;

    auto& recs = per_subject[i];
    auto& rt = per_truth[i];
    const auto true_dob = day_number(s.dob);
    for (std::size_t k = 0; k < n; ++k) {
      Record r;
      r.subject_id = s.subject_id;
      r.image_id = fmt::format("{}_{:02d}", s.subject_id, k);
      r.image_path = "images/" + r.image_id + ".pgm";
      r.arrest_date = date_from_day_number(days[k]);
      r.dob = s.dob;
      r.gender = s.gender;
      r.race = s.race;
      recs.push_back(r);
      RecordTruth t;
      t.subject = i;
      t.true_age = compute_age_dec(s.dob, r.arrest_date);
      rt.push_back(t);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    auto mark = [&](std::size_t k, Correction c) {
      rt[k].corrupted = true;
      rt[k].expected = c;
    };
    switch (s.injection) {
      case Injection::none: break;
      case Injection::gender_flip:
        recs[order[0]].gender = flip(s.gender);
        mark(order[0], Correction::gender);
        break;
      case Injection::race_flip:
        recs[order[0]].race = other_race(s.race, rng);
        mark(order[0], Correction::race_majority);
        break;
      case Injection::gender_tie:
        for (std::size_t k = 0; k < n / 2; ++k) {
          recs[order[k]].gender = flip(s.gender);
          mark(order[k], Correction::gender);
        }
        break;
      case Injection::race_tie:
        for (std::size_t k = 0; k < n / 2; ++k) {
          recs[order[k]].race = other_race(s.race, rng);
          mark(order[k], s.race == Race::other ? Correction::race_other : Correction::race_perception);
        }
        break;
      case Injection::dob_small_majority: {
        const auto j = rng.range(1, kMeanDobMaxGapDays) * (rng.bernoulli(0.5) ? 1 : -1);
        recs[order[0]].dob = date_from_day_number(true_dob + j);
        mark(order[0], Correction::dob_majority);
        break;
      }
      case Injection::dob_small_spread:
      case Injection::dob_large: {
        // Symmetric offsets keep the mean at the true dob and leave no strict majority.
        const bool large = s.injection == Injection::dob_large;
        const auto d = large ? rng.range(kMeanDobMaxGapDays / 2 + 1, 1500)
                             : rng.range(1, kMeanDobMaxGapDays / 2);
        recs[order[0]].dob = date_from_day_number(true_dob - d);
        recs[order[1]].dob = date_from_day_number(true_dob + d);
        const auto c = large ? Correction::dob_uncorrectable : Correction::dob_averaged;
        mark(order[0], c);
        mark(order[1], c);
        if (large) {
          for (std::size_t k = 0; k < n; ++k) rt[k].expected = c;
        }
        break;
      }
    }
  });

  for (std::size_t i = 0; i < n_subjects; ++i) {
    for (std::size_t k = 0; k < per_subject[i].size(); ++k) {
      corpus.records.push_back(std::move(per_subject[i][k]));
      truth.records.push_back(per_truth[i][k]);
    }
  }
  return corpus;
}

namespace {

constexpr int kSlot = 3;
constexpr int kSlotsX = (kCropWidth - 1) / kSlot;   // keeps every feature off the border
constexpr int kSlotsY = (kCropHeight - 1) / kSlot;

// One fixed scattering of the slot lattice, independent of any seed.
const std::vector<int>& slot_layout() {
  static const std::vector<int> layout = [] {
    std::vector<int> v(kSlotsX * kSlotsY);
    std::iota(v.begin(), v.end(), 0);
    Rng rng(0x51075107ULL);
    rng.shuffle(std::span<int>(v));
    return v;
  }();
  return layout;
}

}  // namespace

GrayImage render_image(const Corpus& corpus, std::size_t record_index) {
  const auto& rec = corpus.records.at(record_index);
  const auto& t = corpus.truth.records.at(record_index);
  const auto& s = corpus.truth.subjects.at(t.subject);
  const auto& sig = corpus.spec.signal;
  Rng rng(mix_seed(corpus.spec.seed, Streams::image ^ fnv1a64(rec.image_id)));

  const double offset = s.race == Race::white   ? sig.white_offset
                        : s.race == Race::black ? sig.black_offset
                                                : 0.5 * (sig.white_offset + sig.black_offset);
  const double bg = std::clamp(offset + sig.brightness_age_slope * t.true_age +
                                   rng.normal(0.0, sig.brightness_noise_sd),
                               10.0, 250.0 - sig.contrast);
  const auto base = static_cast<std::uint8_t>(std::lround(bg));
  const auto bright = static_cast<std::uint8_t>(std::lround(bg + sig.contrast));
  GrayImage img(kCropWidth, kCropHeight, base);

  const double pi = s.admixture;
  const double slope = pi * sig.spot_slope_white + (1.0 - pi) * sig.spot_slope_black;
  const int capacity = kSlotsX * kSlotsY;
  const int dashes = std::max(0, sig.race_dashes);
  const int horizontal = static_cast<int>(rng.binomial(static_cast<std::uint64_t>(dashes), pi));
  const int diagonals = s.gender == Gender::female ? sig.female_diagonals : sig.male_diagonals;
  const int reserved = 2 * dashes + std::max({0, sig.female_diagonals, sig.male_diagonals});
  const auto spots = static_cast<int>(std::clamp<long>(
      std::lround(slope * (t.true_age - 16.0) + rng.normal(0.0, sig.spot_noise_sd)), 0,
      std::max(0, capacity - reserved)));

  // Every image fills the same slot sequence, so each feature count is a sum of
  // per-cell LBP bins. Regions: diagonals, horizontal dashes, vertical dashes, spots.
  const auto& slots = slot_layout();
  auto place = [&](std::size_t k, int dx, int dy) {
    if (k >= slots.size()) return;
    const int x = (slots[k] % kSlotsX) * kSlot + 1;
    const int y = (slots[k] / kSlotsX) * kSlot + 1;
    img.at(x, y) = bright;
    if (dx != 0 || dy != 0) img.at(x + dx, y + dy) = bright;
  };
  const auto diag_region = static_cast<std::size_t>(std::max({0, sig.female_diagonals, sig.male_diagonals}));
  const auto dash_region = static_cast<std::size_t>(dashes);
  for (int k = 0; k < diagonals; ++k) place(static_cast<std::size_t>(k), 1, 1);
  for (int k = 0; k < horizontal; ++k) place(diag_region + static_cast<std::size_t>(k), 1, 0);
  for (int k = 0; k < dashes - horizontal; ++k) place(diag_region + dash_region + static_cast<std::size_t>(k), 0, 1);
  for (int k = 0; k < spots; ++k) place(diag_region + 2 * dash_region + static_cast<std::size_t>(k), 0, 0);
  return img;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, bool images) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + (dir / "images").string());
  save_dataset(dir / "raw.csv", corpus.records);
  write_file(dir / "ground_truth.csv", corpus.truth.to_csv(corpus.records));
  ordered_json meta;
  meta["spec"] = corpus.spec.to_json();
  meta["rng"] = Rng::kName;
  ordered_json drawn, realized;
  for (const auto& [k, v] : corpus.truth.drawn) drawn[k] = v;
  for (const auto& [k, v] : corpus.truth.realized) realized[std::string(to_string(k))] = v;
  meta["drawn"] = drawn;
  meta["realized"] = realized;
  meta["subjects"] = corpus.truth.subjects.size();
  meta["records"] = corpus.records.size();
  write_file(dir / "gen_spec.json", meta.dump(2) + "\n");
  if (!images) return;
  parallel_for(corpus.records.size(), [&](std::size_t i) {
    save_pgm(dir / corpus.records[i].image_path, render_image(corpus, i));
  });
}

}  // namespace lfkit
