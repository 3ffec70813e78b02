#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfkit/core.hpp"
#include "lfkit/image.hpp"

namespace lfkit {

enum class AgeDistribution { morph_like, uniform };
std::string_view to_string(AgeDistribution d);
std::optional<AgeDistribution> parse_age_distribution(std::string_view text);

struct CellShare {
  Race race = Race::black;
  Gender gender = Gender::male;
  double weight = 0.0;  // relative; normalised over all cells
};

// Per-subject probabilities. Each kind draws k ~ Binomial(subjects, rate) from
// subjects not already injected that have enough records for the pattern.
struct InjectionRates {
  double gender_flip = 0.0;  // one of >= 3 records flipped (strict majority survives)
  double race_flip = 0.0;    // one of >= 3 records relabelled
  double dob_small = 0.0;    // conflicting dobs within 366 days
  double dob_large = 0.0;    // conflicting dobs more than 366 days apart, 2..4 records
  double gender_tie = 0.0;   // half of an even record count flipped
  double race_tie = 0.0;     // half of an even record count relabelled
  // Share of 3- and 4-record dob_small subjects given the symmetric +-d pattern
  // (mean-resolvable) rather than one jittered record (majority-resolvable).
  double dob_small_spread_fraction = 0.5;
};

// Face-proxy rendering. Background is flat; features are +contrast pixels on a
// lattice of 3x3 slots, filled in one fixed order, so each feature type produces
// its own LBP codes.
struct ImageSignal {
  double white_offset = 150.0;
  double black_offset = 90.0;
  double brightness_age_slope = 0.3;  // intensity per year
  double brightness_noise_sd = 6.0;
  double contrast = 40.0;
  double spot_slope_white = 1.6;  // age spots per year past 16
  double spot_slope_black = 0.8;
  double spot_noise_sd = 2.0;
  int race_dashes = 40;  // horizontal ~ Binomial(race_dashes, admixture), rest vertical
  int female_diagonals = 12;
  int male_diagonals = 2;
  double admixture_spread = 0.5;  // white: 1 - spread * U^2, black: spread * U^2
};

struct GenSpec {
  std::size_t subject_count = 1000;
  double mean_arrests = 4.0;
  std::size_t max_arrests = 53;
  bool single_image = false;
  std::vector<CellShare> cells = default_shares();
  AgeDistribution age_distribution = AgeDistribution::morph_like;
  InjectionRates rates;
  ImageSignal signal;
  std::uint64_t seed = 1;
  int first_year = 2003;
  int last_year = 2007;
  // Optional per-cell image totals over subjects that stay in go_for_age.
  std::map<std::string, std::size_t> cell_image_targets;

  static std::vector<CellShare> default_shares();
  void validate() const;
  nlohmann::ordered_json to_json() const;
  // Overrides the fields present in j (same names as to_json). Throws config_error.
  void apply_json(const nlohmann::json& j);
};

// Full-size cell shares at the given scale, with the reference conflict counts
// turned into per-subject rates and go_for_age image totals per cell.
GenSpec mirror_paper_shape(double scale = 0.1);

// 1,000 single-image subjects, 250 per B/W x M/F cell, uniform ages.
GenSpec toy_spec(std::uint64_t seed);

enum class Injection {
  none,
  gender_flip,
  race_flip,
  dob_small_majority,
  dob_small_spread,
  dob_large,
  gender_tie,
  race_tie,
};
std::string_view to_string(Injection i);

struct SubjectTruth {
  std::string subject_id;
  Gender gender = Gender::male;
  Race race = Race::black;
  Date dob;
  double admixture = 0.0;  // latent share of the white signal
  Injection injection = Injection::none;
};

struct RecordTruth {
  std::size_t subject = 0;     // index into subjects
  bool corrupted = false;
  Correction expected = Correction::none;  // indicator after cleaning (ties decided truthfully)
  double true_age = 0.0;
};

struct GroundTruth {
  std::vector<SubjectTruth> subjects;
  std::vector<RecordTruth> records;  // parallel to the record list
  std::map<std::string, std::size_t> drawn;   // binomial draw per rate name
  std::map<Injection, std::size_t> realized;  // after clamping to eligible subjects

  std::vector<std::string> subjects_with(Injection kind) const;
  std::string to_csv(const std::vector<Record>& records) const;
};

struct Corpus {
  GenSpec spec;
  std::vector<Record> records;
  GroundTruth truth;
};

// Deterministic in spec (including its seed).
Corpus generate(const GenSpec& spec);

// Renders record i at its true age; deterministic in (spec seed, image id).
GrayImage render_image(const Corpus& corpus, std::size_t record_index);

// Writes raw.csv, ground_truth.csv, gen_spec.json and, when images is set,
// images/<image_id>.pgm (paths relative to dir).
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, bool images = true);

}  // namespace lfkit
