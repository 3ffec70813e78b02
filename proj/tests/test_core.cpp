#include <sstream>

#include "doctest.h"
#include "lfkit/core.hpp"
#include "lfkit/dataset_io.hpp"
#include "lfkit/rng.hpp"
#include "test_util.hpp"

using namespace lfkit;
using lfkit::testing::rec;
using lfkit::testing::TempDir;
using lfkit::testing::ymd;

TEST_CASE("dates parse strictly") {
  CHECK(parse_date("2004-02-29"));
  CHECK_FALSE(parse_date("2005-02-29"));
  CHECK_FALSE(parse_date("2005-13-01"));
  CHECK_FALSE(parse_date("05-01-2005"));
  CHECK_FALSE(parse_date("2005-1-01"));
  CHECK_FALSE(parse_date("2005-01-0a"));
  CHECK(format_date(*parse_date("1987-07-04")) == "1987-07-04");
}

TEST_CASE("day numbers round-trip around the epoch") {
  CHECK(day_number(ymd(1970, 1, 1)) == 0);
  CHECK(day_number(ymd(1969, 12, 31)) == -1);
  CHECK(day_number(ymd(2000, 3, 1)) == 11017);
  for (std::int64_t d = -30000; d <= 30000; d += 997) {
    CHECK(day_number(date_from_day_number(d)) == d);
  }
}

TEST_CASE("decimal age is days over 365.25") {
  const auto dob = ymd(1980, 1, 1);
  const auto arrest = ymd(2005, 6, 15);
  // 1980-01-01 .. 2005-06-15: 25 years with 7 leap days, then 165 days.
  const double days = 25 * 365 + 7 + 165;
  CHECK(compute_age_dec(dob, arrest) == doctest::Approx(days / 365.25).epsilon(1e-15));
  CHECK(compute_age_dec(dob, dob) == 0.0);
  try {
    compute_age_dec(arrest, dob);
    FAIL("expected negative_age");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::negative_age);
  }
}

TEST_CASE("codes parse and print") {
  for (auto r : kAllRaces) CHECK(parse_race(std::string(1, code(r))) == r);
  for (auto g : kAllGenders) CHECK(parse_gender(std::string(1, code(g))) == g);
  CHECK_FALSE(parse_race("X"));
  CHECK_FALSE(parse_gender("U"));
  for (int i = 0; i <= 8; ++i) CHECK(correction_from_int(i));
  CHECK_FALSE(correction_from_int(9));
  CHECK_FALSE(correction_from_int(-1));
}

TEST_CASE("ledger counts values per attribute") {
  std::vector<Record> rs{
      rec("b", "7", "1980-01-01", "2004-01-01", 'M', 'B'),
      rec("a", "7", "1980-01-02", "2003-01-01", 'M', 'W'),
      rec("c", "7", "1980-01-01", "2004-01-01", 'F', 'B'),
  };
  const auto ledger = make_ledger("7", rs);
  CHECK(ledger.records.front().image_id == "a");  // earliest arrest first
  CHECK(ledger.records[1].image_id == "b");       // ties broken by image id
  CHECK(ledger.gender_values.at(Gender::male) == 2);
  CHECK(ledger.race_values.at(Race::black) == 2);
  CHECK(ledger.dob_values.size() == 2);
  CHECK_FALSE(ledger.gender_consistent());
  CHECK_FALSE(ledger.race_consistent());
  CHECK_FALSE(ledger.dob_consistent());

  rs.push_back(rec("d", "2", "1990-01-01", "2006-01-01", 'F', 'W'));
  const auto grouped = group_by_subject(rs);
  REQUIRE(grouped.size() == 2);
  CHECK(grouped[0].subject_id == "2");
  CHECK(grouped[1].records.size() == 3);
}

TEST_CASE("dataset table round-trips") {
  std::vector<Record> rs{
      rec("s1_00", "s1", "1980-01-01", "2004-01-01", 'M', 'B'),
      rec("s2_00", "s2", "1975-05-05", "2005-03-03", 'F', 'W'),
  };
  const auto text = serialize_dataset(rs);
  std::istringstream in(text);
  CHECK(parse_dataset(in) == rs);

  rs[0].corrected = Correction::race_majority;
  rs[0].age_dec = compute_age_dec(rs[0].dob, rs[0].arrest_date);
  rs[1].corrected = Correction::none;
  rs[1].age_dec = compute_age_dec(rs[1].dob, rs[1].arrest_date);
  std::istringstream in2(serialize_dataset(rs));
  const auto back = parse_dataset(in2);
  REQUIRE(back.size() == 2);
  CHECK(back[0].corrected == Correction::race_majority);
  CHECK(*back[0].age_dec == doctest::Approx(*rs[0].age_dec).epsilon(1e-12));
}

namespace {

ErrorKind parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_dataset(in);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io_error;
}

}  // namespace

TEST_CASE("dataset parsing reports the failing field") {
  const std::string header = "id_num,picture,dob,date_of_arrest,race,gender\n";
  CHECK(parse_error("id_num,picture,dob,race,gender\n1,a,1980-01-01,B,M\n") ==
        ErrorKind::missing_column);
  CHECK(parse_error(header + "1,a,1980/01/01,2004-01-01,B,M\n") == ErrorKind::unparseable_date);
  CHECK(parse_error(header + "1,a,1980-01-01,2004-01-01,Z,M\n") == ErrorKind::unknown_race_code);
  CHECK(parse_error(header + "1,a,1980-01-01,2004-01-01,B,Q\n") == ErrorKind::unknown_gender_code);
  CHECK(parse_error("") == ErrorKind::missing_column);
}

TEST_CASE("column map renames the input") {
  ColumnMap cols;
  cols.subject_id = "sid";
  cols.image_id = "img";
  std::istringstream in("img,sid,dob,date_of_arrest,race,gender\nx,9,1980-01-01,2004-01-01,H,F\n");
  const auto rs = parse_dataset(in, cols);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].subject_id == "9");
  CHECK(rs[0].image_id == "x");
  CHECK(rs[0].race == Race::hispanic);
}

TEST_CASE("quoted csv fields") {
  const auto f = split_csv_line(R"(a,"b,c","d""e",)");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "d\"e");
  CHECK(f[3].empty());
}

TEST_CASE("manifest sidecar round-trips and tracks content") {
  TempDir dir("core");
  std::vector<Record> rs{rec("a", "1", "1980-01-01", "2004-01-01", 'M', 'B')};
  const auto m = save_versioned(dir.path(), "go_for_age", DatasetVersion::go_for_age, rs);
  CHECK(m.record_count == 1);
  CHECK(m.subject_count == 1);
  CHECK(load_manifest(dir / "go_for_age.manifest.json") == m);
  CHECK(load_dataset(dir / "go_for_age.csv") == rs);
  rs[0].race = Race::white;
  CHECK(make_manifest("go_for_age", DatasetVersion::go_for_age, rs).checksum != m.checksum);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("rng is reproducible and roughly calibrated") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));

  Rng r(123);
  const int n = 200000;
  double sum = 0, sumsq = 0, bin = 0, geo = 0;
  int below_hits[5] = {};
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sumsq += z * z;
    bin += static_cast<double>(r.binomial(40, 0.3));
    geo += static_cast<double>(r.geometric(0.25));
    ++below_hits[r.below(5)];
  }
  // Tolerances are about five standard errors.
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sumsq / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(bin / n - 12.0) < 5.0 * std::sqrt(40 * 0.3 * 0.7 / n));
  CHECK(std::abs(geo / n - 4.0) < 5.0 * std::sqrt(0.75 / 0.0625 / n));
  for (int k : below_hits) CHECK(std::abs(k - n / 5.0) < 5.0 * std::sqrt(n * 0.2 * 0.8));
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.range(-3, 3);
    CHECK((v >= -3 && v <= 3));
  }
}
