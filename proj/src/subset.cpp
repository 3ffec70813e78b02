#include "lfkit/subset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "lfkit/dataset_io.hpp"
#include "lfkit/parallel.hpp"
#include "lfkit/rng.hpp"

namespace lfkit {

using nlohmann::ordered_json;

std::string_view to_string(SetLabel s) {
  switch (s) {
    case SetLabel::s1: return "S1";
    case SetLabel::s2: return "S2";
    case SetLabel::r: return "R";
  }
  return "";
}

std::optional<SetLabel> parse_set_label(std::string_view text) {
  if (text == "S1") return SetLabel::s1;
  if (text == "S2") return SetLabel::s2;
  if (text == "R") return SetLabel::r;
  return std::nullopt;
}

std::string cell_name(Cell c) { return {code(c.race), code(c.gender)}; }

namespace {

bool in_study(Race r) { return r == Race::white || r == Race::black; }

std::int64_t cell_weight(const SubsetSpec& spec, Cell c) {
  const int rw = c.race == Race::white ? spec.white_weight : spec.black_weight;
  const int gw = c.gender == Gender::male ? spec.male_weight : spec.female_weight;
  return static_cast<std::int64_t>(rw) * gw;
}

constexpr Cell kStudyCells[] = {{Race::white, Gender::female},
                                {Race::black, Gender::female},
                                {Race::white, Gender::male},
                                {Race::black, Gender::male}};

}  // namespace

void SubsetSpec::validate() const {
  if (male_weight <= 0 || female_weight <= 0 || white_weight <= 0 || black_weight <= 0) {
    throw Error(ErrorKind::config_error, "subset ratios must be positive integers");
  }
  if (slack < 0) throw Error(ErrorKind::config_error, "slack must be non-negative");
  if (!in_study(anchor.race)) {
    throw Error(ErrorKind::config_error, "anchor cell must be white or black");
  }
  if (seeds.empty()) throw Error(ErrorKind::config_error, "seed list is empty");
  if (permutations == 0) throw Error(ErrorKind::config_error, "permutations must be >= 1");
}

ordered_json SubsetSpec::to_json() const {
  ordered_json j;
  j["male_female"] = fmt::format("{}:{}", male_weight, female_weight);
  j["white_black"] = fmt::format("{}:{}", white_weight, black_weight);
  j["anchor"] = cell_name(anchor);
  j["slack"] = slack;
  j["permutations"] = permutations;
  j["combiner"] = combiner == Combiner::min ? "min" : "mean";
  j["repair_budget"] = repair_budget;
  j["seeds"] = seeds;
  return j;
}

std::string SubsetSpec::hash() const {
  auto j = to_json();
  j.erase("seeds");
  return "fnv1a64:" + hex64(fnv1a64(j.dump()));
}

std::vector<Cell> processing_order(const SubsetSpec& spec) {
  std::vector<Cell> order{spec.anchor};
  for (const auto& c : kStudyCells) {
    if (!(c == spec.anchor)) order.push_back(c);
  }
  return order;
}

void SplitAssignment::reindex() {
  index.clear();
  index.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) index.emplace(rows[i].image_id, i);
}

std::optional<SetLabel> SplitAssignment::set_of(const std::string& image_id) const {
  const auto it = index.find(image_id);
  if (it == index.end()) return std::nullopt;
  return rows[it->second].set;
}

double record_age(const Record& r) {
  return r.age_dec ? *r.age_dec : compute_age_dec(r.dob, r.arrest_date);
}

namespace {

// Subjects grouped by side (0 = S1, 1 = S2, 2 = R) with per-size buckets, so
// "some subject of size in [lo, hi]" lookups cost O(max size).
class Packing {
 public:
  explicit Packing(const std::vector<std::int64_t>& sizes)
      : sizes_(sizes), group_(sizes.size(), 2), slot_(sizes.size()), lslot_(sizes.size()) {
    max_size_ = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
    for (auto& g : buckets_) g.assign(static_cast<std::size_t>(max_size_) + 1, {});
    for (std::size_t i = 0; i < sizes.size(); ++i) insert(static_cast<int>(i), 2);
  }

  int group(int i) const { return group_[i]; }
  std::int64_t sum(int g) const { return sums_[g]; }
  std::int64_t size(int i) const { return sizes_[i]; }
  bool empty(int g) const { return lists_[g].empty(); }

  void move(int i, int g) {
    erase(i);
    insert(i, g);
  }

  int random_member(int g, Rng& rng) const {
    return lists_[g][static_cast<std::size_t>(rng.below(lists_[g].size()))];
  }

  std::optional<int> find(int g, std::int64_t lo, std::int64_t hi, Rng& rng) const {
    lo = std::max<std::int64_t>(lo, 1);
    hi = std::min(hi, max_size_);
    std::vector<std::int64_t> candidates;
    for (std::int64_t s = lo; s <= hi; ++s) {
      if (!buckets_[g][s].empty()) candidates.push_back(s);
    }
    if (candidates.empty()) return std::nullopt;
    const auto s = candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
    const auto& b = buckets_[g][s];
    return b[static_cast<std::size_t>(rng.below(b.size()))];
  }

  // a in g1, b in g2 with size(b) - size(a) in [lo, hi].
  std::optional<std::pair<int, int>> find_swap(int g1, int g2, std::int64_t lo, std::int64_t hi,
                                               Rng& rng) const {
    std::vector<std::pair<std::int64_t, std::int64_t>> candidates;
    for (std::int64_t a = 1; a <= max_size_; ++a) {
      if (buckets_[g1][a].empty()) continue;
      for (std::int64_t b = std::max<std::int64_t>(1, a + lo); b <= std::min(max_size_, a + hi);
           ++b) {
        if (!buckets_[g2][b].empty()) candidates.emplace_back(a, b);
      }
    }
    if (candidates.empty()) return std::nullopt;
    const auto [a, b] = candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
    const auto& ba = buckets_[g1][a];
    const auto& bb = buckets_[g2][b];
    return std::pair{ba[static_cast<std::size_t>(rng.below(ba.size()))],
                     bb[static_cast<std::size_t>(rng.below(bb.size()))]};
  }

 private:
  void insert(int i, int g) {
    auto& b = buckets_[g][sizes_[i]];
    slot_[i] = b.size();
    b.push_back(i);
    lslot_[i] = lists_[g].size();
    lists_[g].push_back(i);
    group_[i] = g;
    sums_[g] += sizes_[i];
  }

  void erase(int i) {
    const int g = group_[i];
    auto& b = buckets_[g][sizes_[i]];
    const int last = b.back();
    b[slot_[i]] = last;
    slot_[last] = slot_[i];
    b.pop_back();
    auto& l = lists_[g];
    const int llast = l.back();
    l[lslot_[i]] = llast;
    lslot_[llast] = lslot_[i];
    l.pop_back();
    sums_[g] -= sizes_[i];
  }

  std::vector<std::int64_t> sizes_;
  std::vector<int> group_;
  std::vector<std::size_t> slot_;
  std::vector<std::size_t> lslot_;
  std::array<std::vector<std::vector<int>>, 3> buckets_;
  std::array<std::vector<int>, 3> lists_;
  std::array<std::int64_t, 3> sums_{};
  std::int64_t max_size_ = 0;
};

}  // namespace

PackResult pack_cell(const std::vector<std::int64_t>& sizes, std::int64_t target,
                     std::int64_t slack, bool anchor, std::uint64_t seed, std::size_t budget) {
  Packing pk(sizes);
  Rng rng(seed);
  const auto n = static_cast<int>(sizes.size());

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));

  auto deficit = [&](int side) { return target - pk.sum(side); };
  auto satisfied = [&] {
    return std::abs(deficit(0)) <= slack && std::abs(deficit(1)) <= slack;
  };

  for (const int i : order) {
    const int first = deficit(0) >= deficit(1) ? 0 : 1;
    if (anchor) {
      pk.move(i, first);
      continue;
    }
    for (const int side : {first, 1 - first}) {
      if (pk.size(i) <= deficit(side) + slack) {
        pk.move(i, side);
        break;
      }
    }
  }

  std::size_t moves = 0;
  while (!satisfied() && moves < budget) {
    ++moves;
    if (anchor) {
      // Transfer into S1 that leaves both sides within slack.
      const std::int64_t lo = std::max(deficit(0) - slack, -deficit(1) - slack);
      const std::int64_t hi = std::min(deficit(0) + slack, -deficit(1) + slack);
      if (lo <= hi) {
        if (hi > 0) {
          if (auto i = pk.find(1, std::max<std::int64_t>(lo, 1), hi, rng)) {
            pk.move(*i, 0);
            continue;
          }
        }
        if (lo < 0) {
          if (auto i = pk.find(0, std::max<std::int64_t>(-hi, 1), -lo, rng)) {
            pk.move(*i, 1);
            continue;
          }
        }
        if (auto ab = pk.find_swap(0, 1, lo, hi, rng)) {
          pk.move(ab->first, 1);
          pk.move(ab->second, 0);
          continue;
        }
      }
      if (pk.empty(0) || pk.empty(1)) {
        const int from = pk.empty(0) ? 1 : 0;
        pk.move(pk.random_member(from, rng), 1 - from);
      } else if (rng.bernoulli(0.5)) {
        const int a = pk.random_member(0, rng);
        const int b = pk.random_member(1, rng);
        pk.move(a, 1);
        pk.move(b, 0);
      } else {
        const int from = deficit(0) < deficit(1) ? 0 : 1;
        pk.move(pk.random_member(from, rng), 1 - from);
      }
      continue;
    }

    const int side = std::abs(deficit(0)) > slack ? 0 : 1;
    const std::int64_t d = deficit(side);
    const std::int64_t lo = d - slack;
    const std::int64_t hi = d + slack;
    if (d > 0) {
      if (auto i = pk.find(2, lo, hi, rng)) {
        pk.move(*i, side);
        continue;
      }
    } else {
      if (auto i = pk.find(side, -hi, -lo, rng)) {
        pk.move(*i, 2);
        continue;
      }
    }
    if (auto ab = pk.find_swap(side, 2, lo, hi, rng)) {
      pk.move(ab->first, 2);
      pk.move(ab->second, side);
      continue;
    }
    // No single move closes the gap: shake the side and try again.
    if (d < 0 || pk.empty(2) || (!pk.empty(side) && rng.bernoulli(0.5))) {
      if (!pk.empty(side)) pk.move(pk.random_member(side, rng), 2);
    } else if (auto i = pk.find(2, 1, hi, rng)) {
      pk.move(*i, side);
    } else if (!pk.empty(side)) {
      pk.move(pk.random_member(side, rng), 2);
    }
  }

  PackResult out;
  out.sides.resize(sizes.size());
  for (int i = 0; i < n; ++i) {
    out.sides[i] = pk.group(i) == 0 ? SetLabel::s1 : pk.group(i) == 1 ? SetLabel::s2 : SetLabel::r;
  }
  out.achieved = {pk.sum(0), pk.sum(1)};
  out.ok = satisfied();
  return out;
}

namespace {

struct SubjectInfo {
  std::string id;
  Cell cell;
  std::int64_t images = 0;
};

std::vector<SubjectInfo> subjects_of(const std::vector<Record>& records) {
  std::map<std::string, SubjectInfo> by_id;
  for (const auto& r : records) {
    auto [it, inserted] = by_id.try_emplace(r.subject_id);
    if (inserted) {
      it->second.id = r.subject_id;
      it->second.cell = {r.race, r.gender};
    }
    ++it->second.images;
  }
  std::vector<SubjectInfo> out;
  out.reserve(by_id.size());
  for (auto& [id, info] : by_id) out.push_back(std::move(info));
  return out;
}

std::map<std::string, std::int64_t> cell_targets(const std::vector<Record>& records,
                                                 const SubsetSpec& spec) {
  std::int64_t anchor_images = 0;
  for (const auto& r : records) {
    if (Cell{r.race, r.gender} == spec.anchor) ++anchor_images;
  }
  const std::int64_t t = anchor_images / 2;
  const std::int64_t wa = cell_weight(spec, spec.anchor);
  std::map<std::string, std::int64_t> targets;
  for (const auto& c : kStudyCells) {
    const std::int64_t num = t * cell_weight(spec, c);
    // Half-up rounding when the ratio does not divide the anchor target.
    targets[cell_name(c)] = (2 * num + wa) / (2 * wa);
  }
  return targets;
}

std::map<std::string, CellCounts> count_cells(const std::vector<Record>& records,
                                              const SplitAssignment& a) {
  std::map<std::string, CellCounts> cells;
  std::map<std::string, std::set<std::string>> seen[3];
  for (const auto& r : records) {
    const auto set = a.set_of(r.image_id);
    if (!set) continue;
    const auto s = static_cast<std::size_t>(*set);
    const auto name = cell_name({r.race, r.gender});
    auto& cc = cells[name];
    ++cc.images[s];
    if (seen[s][name].insert(r.subject_id).second) ++cc.subjects[s];
  }
  return cells;
}

}  // namespace

SplitAssignment allocate(const std::vector<Record>& records, const SubsetSpec& spec,
                         std::uint64_t seed) {
  spec.validate();
  const auto subjects = subjects_of(records);
  const auto targets = cell_targets(records, spec);

  std::unordered_map<std::string, SetLabel> subject_set;
  for (const auto& s : subjects) subject_set[s.id] = SetLabel::r;

  const auto order = processing_order(spec);
  for (std::size_t ci = 0; ci < order.size(); ++ci) {
    const Cell cell = order[ci];
    std::vector<const SubjectInfo*> members;
    std::vector<std::int64_t> sizes;
    for (const auto& s : subjects) {
      if (s.cell == cell) {
        members.push_back(&s);
        sizes.push_back(s.images);
      }
    }
    const auto name = cell_name(cell);
    const auto target = targets.at(name);
    if (members.empty()) {
      throw Error(ErrorKind::infeasible_split,
                  fmt::format("InfeasibleSplit(cell={}, target={}, best=0/0): no subjects", name,
                              target));
    }
    const auto packed = pack_cell(sizes, target, spec.slack, cell == spec.anchor,
                                  mix_seed(seed, ci + 1), spec.repair_budget);
    if (!packed.ok) {
      throw Error(ErrorKind::infeasible_split,
                  fmt::format("InfeasibleSplit(cell={}, target={}, best={}/{})", name, target,
                              packed.achieved[0], packed.achieved[1]));
    }
    for (std::size_t i = 0; i < members.size(); ++i) subject_set[members[i]->id] = packed.sides[i];
  }

  SplitAssignment a;
  a.seed = seed;
  a.spec_hash = spec.hash();
  a.targets = targets;
  a.rows.reserve(records.size());
  for (const auto& r : records) a.rows.push_back({r.image_id, r.subject_id, subject_set.at(r.subject_id)});
  a.reindex();
  a.cells = count_cells(records, a);
  a.certificate = certify(a, records, spec);
  return a;
}

Certificate certify(const SplitAssignment& a, const std::vector<Record>& records,
                    const SubsetSpec& spec) {
  Certificate c;

  std::set<std::string> images;
  for (const auto& row : a.rows) images.insert(row.image_id);
  c.complete = images.size() == a.rows.size() && a.rows.size() == records.size();
  for (const auto& r : records) {
    if (!images.count(r.image_id)) c.complete = false;
  }

  std::map<std::string, std::set<SetLabel>> subject_sets;
  for (const auto& row : a.rows) subject_sets[row.subject_id].insert(row.set);
  c.subject_disjoint = std::all_of(subject_sets.begin(), subject_sets.end(),
                                   [](const auto& kv) { return kv.second.size() == 1; });

  c.anchor_in_s = true;
  c.others_in_r = true;
  std::map<std::string, std::array<std::int64_t, 3>> per_cell;
  for (const auto& r : records) {
    const auto set = a.set_of(r.image_id);
    if (!set) continue;
    if (Cell{r.race, r.gender} == spec.anchor && *set == SetLabel::r) c.anchor_in_s = false;
    if (!in_study(r.race) && *set != SetLabel::r) c.others_in_r = false;
    ++per_cell[cell_name({r.race, r.gender})][static_cast<std::size_t>(*set)];
  }

  const auto targets = cell_targets(records, spec);
  c.per_cell_equal = true;
  for (const auto& cell : kStudyCells) {
    const auto counts = per_cell[cell_name(cell)];
    const auto target = targets.at(cell_name(cell));
    for (int side = 0; side < 2; ++side) {
      if (std::abs(counts[side] - target) > spec.slack) c.per_cell_equal = false;
    }
    if (std::abs(counts[0] - counts[1]) > spec.slack) c.per_cell_equal = false;
  }

  c.ratios = true;
  const double wa = static_cast<double>(cell_weight(spec, spec.anchor));
  for (int side = 0; side < 2; ++side) {
    const double anchor_images = static_cast<double>(per_cell[cell_name(spec.anchor)][side]);
    for (const auto& cell : kStudyCells) {
      const double ratio = static_cast<double>(cell_weight(spec, cell)) / wa;
      const double images_c = static_cast<double>(per_cell[cell_name(cell)][side]);
      if (std::abs(images_c - ratio * anchor_images) >
          static_cast<double>(spec.slack) * (1.0 + ratio) + 1e-9) {
        c.ratios = false;
      }
    }
  }
  return c;
}

SeedScore score_split(const SplitAssignment& a, const std::vector<Record>& records,
                      const SubsetSpec& spec, unsigned threads) {
  std::vector<double> s1;
  std::vector<double> s2;
  for (const auto& r : records) {
    const auto set = a.set_of(r.image_id);
    if (set == SetLabel::s1) s1.push_back(record_age(r));
    if (set == SetLabel::s2) s2.push_back(record_age(r));
  }
  PermutationOptions opts;
  opts.permutations = spec.permutations;
  opts.seed = mix_seed(a.seed, 0x5c07e);
  opts.threads = threads;
  const auto r = permutation_ks_ad(s1, s2, opts);
  SeedScore score;
  score.seed = a.seed;
  score.ks_statistic = r.ks.statistic;
  score.ad_statistic = r.ad.statistic;
  score.ks_p = r.ks.p_value;
  score.ad_p = r.ad.p_value;
  score.combined = spec.combiner == Combiner::min ? std::min(score.ks_p, score.ad_p)
                                                  : 0.5 * (score.ks_p + score.ad_p);
  return score;
}

std::vector<SeedScore> SearchResult::ranked() const {
  auto out = scores;
  std::stable_sort(out.begin(), out.end(), [](const SeedScore& a, const SeedScore& b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    return a.seed < b.seed;
  });
  return out;
}

SearchResult search_seeds(const std::vector<Record>& records, const SubsetSpec& spec,
                          unsigned threads) {
  spec.validate();
  struct Outcome {
    std::optional<SeedScore> score;
    std::string failure;
  };
  std::vector<Outcome> outcomes(spec.seeds.size());
  parallel_for(
      spec.seeds.size(),
      [&](std::size_t i) {
        try {
          const auto a = allocate(records, spec, spec.seeds[i]);
          outcomes[i].score = score_split(a, records, spec, 1);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::infeasible_split) throw;
          outcomes[i].failure = e.what();
        }
      },
      threads);

  SearchResult result;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].score) {
      result.scores.push_back(*outcomes[i].score);
    } else {
      result.infeasible.emplace_back(spec.seeds[i], outcomes[i].failure);
    }
  }
  if (result.scores.empty()) {
    throw Error(ErrorKind::all_seeds_infeasible,
                fmt::format("all {} seeds infeasible; first: {}", spec.seeds.size(),
                            result.infeasible.front().second));
  }
  result.best = allocate(records, spec, result.ranked().front().seed);
  return result;
}

AgeSummary summarize(std::vector<double> ages) {
  AgeSummary s;
  s.count = ages.size();
  if (ages.empty()) return s;
  std::sort(ages.begin(), ages.end());
  auto quantile = [&](double q) {
    const double h = q * static_cast<double>(ages.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, ages.size() - 1);
    return ages[lo] + (h - static_cast<double>(lo)) * (ages[hi] - ages[lo]);
  };
  s.min = ages.front();
  s.max = ages.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.mean = std::accumulate(ages.begin(), ages.end(), 0.0) / static_cast<double>(ages.size());
  if (ages.size() > 1) {
    double ss = 0.0;
    for (double a : ages) ss += (a - s.mean) * (a - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(ages.size() - 1));
  }
  return s;
}

namespace {

constexpr double kHistLo = 15.0;
constexpr double kHistHi = 80.0;
constexpr double kHistWidth = 5.0;

void append_histogram(std::string& out, const std::string& set, const std::string& cell,
                      const std::vector<double>& ages) {
  const int bins = static_cast<int>((kHistHi - kHistLo) / kHistWidth);
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double a : ages) {
    int b = static_cast<int>(std::floor((a - kHistLo) / kHistWidth));
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  for (int b = 0; b < bins; ++b) {
    out += fmt::format("{},{},{},{},{}\n", set, cell, kHistLo + b * kHistWidth,
                       kHistLo + (b + 1) * kHistWidth, counts[static_cast<std::size_t>(b)]);
  }
}

ordered_json summary_json(const AgeSummary& s) {
  return {{"count", s.count}, {"min", s.min},   {"q1", s.q1},     {"median", s.median},
          {"q3", s.q3},       {"max", s.max},   {"mean", s.mean}, {"sd", s.sd}};
}

}  // namespace

SummaryBundle emit_summaries(const SplitAssignment& a, const std::vector<Record>& records) {
  SummaryBundle bundle;
  std::map<std::string, std::map<std::string, std::vector<double>>> ages;  // set -> cell -> ages
  std::vector<double> all;
  for (const auto& r : records) {
    const auto set = a.set_of(r.image_id);
    if (!set) continue;
    const double age = record_age(r);
    const auto cell = cell_name({r.race, r.gender});
    ages[std::string(to_string(*set))][cell].push_back(age);
    if (*set != SetLabel::r) ages["S"][cell].push_back(age);
    ages["W"][cell].push_back(age);
  }
  for (const auto* set : {"S1", "S2", "S", "R", "W"}) {
    std::vector<double> pooled;
    for (const auto& [cell, v] : ages[set]) pooled.insert(pooled.end(), v.begin(), v.end());
    bundle.sets[set] = summarize(pooled);
  }

  bundle.counts_csv = "set,cell,images,subjects\n";
  std::set<std::string> names;
  for (const auto& [name, cc] : a.cells) names.insert(name);
  const char* set_names[] = {"S1", "S2", "R"};
  for (int s = 0; s < 3; ++s) {
    std::size_t images = 0;
    std::size_t subjects = 0;
    for (const auto& name : names) {
      const auto& cc = a.cells.at(name);
      bundle.counts_csv += fmt::format("{},{},{},{}\n", set_names[s], name, cc.images[s], cc.subjects[s]);
      images += cc.images[s];
      subjects += cc.subjects[s];
    }
    bundle.counts_csv += fmt::format("{},all,{},{}\n", set_names[s], images, subjects);
  }

  bundle.age_hist_csv = "set,cell,bin_lo,bin_hi,count\n";
  for (const auto* set : {"S1", "S2"}) {
    for (const auto& c : kStudyCells) append_histogram(bundle.age_hist_csv, set, cell_name(c), ages[set][cell_name(c)]);
  }
  for (const auto* set : {"S1", "S2", "W"}) {
    std::vector<double> pooled;
    for (const auto& [cell, v] : ages[set]) pooled.insert(pooled.end(), v.begin(), v.end());
    append_histogram(bundle.age_hist_csv, set, "all", pooled);
  }

  bundle.ecdf_csv = "set,age,cum_prop\n";
  for (const auto* set : {"S1", "S2", "W"}) {
    std::vector<double> pooled;
    for (const auto& [cell, v] : ages[set]) pooled.insert(pooled.end(), v.begin(), v.end());
    if (pooled.empty()) continue;
    const Ecdf ecdf(pooled);
    for (int k = 0; k <= 256; ++k) {
      const double age = 16.0 + 0.25 * k;
      bundle.ecdf_csv += fmt::format("{},{},{}\n", set, age, ecdf(age));
    }
  }
  return bundle;
}

ordered_json SummaryBundle::to_json() const {
  ordered_json j;
  for (const auto& name : {"S1", "S2", "S", "R", "W"}) j[name] = summary_json(sets.at(name));
  return j;
}

std::string serialize_assignment(const SplitAssignment& a) {
  std::string out = "image_id,subject_id,set\n";
  out.reserve(a.rows.size() * 24);
  for (const auto& row : a.rows) {
    out += row.image_id;
    out += ',';
    out += row.subject_id;
    out += ',';
    out += to_string(row.set);
    out += '\n';
  }
  out += fmt::format("# seed={} spec_hash={} rng={}\n", a.seed, a.spec_hash, Rng::kName);
  return out;
}

void save_assignment(const std::filesystem::path& path, const SplitAssignment& a) {
  write_file(path, serialize_assignment(a));
}

SplitAssignment load_assignment(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "image_id,subject_id,set") {
    throw Error(ErrorKind::config_error, "assignment file has an unexpected header: " + path.string());
  }
  SplitAssignment a;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        if (key == "seed") a.seed = std::stoull(value);
        if (key == "spec_hash") a.spec_hash = value;
      }
      continue;
    }
    ++row;
    const auto fields = split_csv_line(line);
    const auto set = fields.size() == 3 ? parse_set_label(fields[2]) : std::nullopt;
    if (!set) {
      throw Error(ErrorKind::config_error, fmt::format("assignment row {} is malformed", row));
    }
    a.rows.push_back({fields[0], fields[1], *set});
  }
  a.reindex();
  return a;
}

ordered_json scores_to_json(const SearchResult& result, const SubsetSpec& spec) {
  ordered_json j;
  j["rng"] = std::string(Rng::kName);
  j["spec"] = spec.to_json();
  j["spec_hash"] = spec.hash();
  j["best_seed"] = result.best.seed;
  ordered_json scores = ordered_json::array();
  for (const auto& s : result.ranked()) {
    scores.push_back({{"seed", s.seed},
                      {"ks_statistic", s.ks_statistic},
                      {"ks_p", s.ks_p},
                      {"ad_statistic", s.ad_statistic},
                      {"ad_p", s.ad_p},
                      {"combined", s.combined}});
  }
  j["ranked"] = std::move(scores);
  ordered_json infeasible = ordered_json::array();
  for (const auto& [seed, why] : result.infeasible) infeasible.push_back({{"seed", seed}, {"reason", why}});
  j["infeasible"] = std::move(infeasible);
  ordered_json cells;
  for (const auto& [name, cc] : result.best.cells) {
    cells[name] = {{"images", cc.images}, {"subjects", cc.subjects}};
  }
  j["best_cells"] = std::move(cells);
  return j;
}

}  // namespace lfkit
