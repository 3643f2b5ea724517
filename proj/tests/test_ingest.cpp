#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "httplib.h"
#include "nitrosep/fetch.hpp"
#include "nitrosep/http_transport.hpp"
#include "nitrosep/ingest.hpp"
#include "test_support.hpp"

using namespace nitrosep;
using nitrosep::testing::fixture_dir;

namespace {

Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("nitrosep_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(ParseRdb, CommentsHeaderFormatAndTwoRows) {
  const std::string rdb =
      "# one\n# two\n# three\n"
      "agency_cd\tsample_dt\tp00618\n"
      "5s\t10d\t12n\n"
      "USGS\t1990-01-02\t1.5\n"
      "USGS\t1990-02-02\t\n";
  const auto t = parse_rdb(rdb);
  EXPECT_EQ(t.rows(), 2u);
  ASSERT_EQ(t.cols(), 1u);
  EXPECT_EQ(t.variables[0].code, "00618");
  EXPECT_EQ(t.at(0, 0), 1.5);
  EXPECT_FALSE(t.at(1, 0).has_value());
}

TEST(ParseRdb, MissingTokens) {
  EXPECT_FALSE(parse_cell("").has_value());
  EXPECT_FALSE(parse_cell("NA").has_value());
  EXPECT_FALSE(parse_cell("na").has_value());
  EXPECT_FALSE(parse_cell("<0.01").has_value());
  EXPECT_EQ(parse_cell(".25"), 0.25);
}

// Oracle: read off sample20.rdb by eye. Rows i = 0..19; p00608 is blank
// for i = 3, 10, 17 and "NA" for i = 12.
TEST(ParseRdb, TwentyRowFixtureMatchesHandParse) {
  const auto t = parse_rdb(read_file(fixture_dir() / "sample20.rdb"));
  ASSERT_EQ(t.rows(), 20u);
  ASSERT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.variables[0].code, "00618");
  EXPECT_EQ(t.variables[1].code, "00608");
  EXPECT_EQ(t.variables[2].code, "00940");
  EXPECT_EQ(t.timestamps[5], ymd(1987, 4, 15));
  EXPECT_EQ(t.at(5, 0), 0.1);
  EXPECT_FALSE(t.at(3, 1).has_value());
  EXPECT_EQ(t.at(19, 2), 8.75);
  EXPECT_EQ(t.missing_count(), 4u);
  ASSERT_EQ(t.media.size(), 20u);
  EXPECT_EQ(t.media[0], "WS");
}

TEST(ParseRdb, Errors) {
  EXPECT_THROW(parse_rdb("# only comments\n"), MalformedHeader);
  EXPECT_THROW(parse_rdb("sample_dt\tp00618\n10d\n"), MalformedHeader);
  EXPECT_THROW(parse_rdb("sample_dt\tp00618\n10d\t12x\n"), MalformedHeader);
  EXPECT_THROW(parse_rdb("site_no\tp00618\n15s\t12n\n"), MalformedHeader);
  try {
    parse_rdb("sample_dt\tp00618\n10d\t12n\n1990-01-01\t1\n1990-01-02\n");
    FAIL();
  } catch (const RaggedRow& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_rdb("sample_dt\tp00618\n10d\t12n\n1990-13-01\t1\n"), MalformedDate);
  EXPECT_THROW(parse_rdb("sample_dt\tp00618\n10d\t12n\n1990-01-01\t1\n1990-01-01\t2\n"),
               DuplicateTimestampVariable);
}

TEST(ParseRdb, SameDayRecordsMergeWhenDisjoint) {
  const auto t = parse_rdb(
      "sample_dt\tp00618\tp00940\n10d\t12n\t12n\n"
      "1990-01-01 10:00\t1\t\n1990-01-01 14:00\t\t5\n1989-12-31\t0.5\t4\n");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.timestamps[0], ymd(1989, 12, 31));
  EXPECT_EQ(t.at(1, 0), 1.0);
  EXPECT_EQ(t.at(1, 1), 5.0);
}

TEST(ParseRdb, GenericColumnsWithoutParameterCodes) {
  const auto t = parse_rdb("site_no\tdate\tflow\tqual_cd\n15s\t10d\t8n\t2s\n1\t2000-01-01\t3.5\tA\n");
  ASSERT_EQ(t.cols(), 1u);
  EXPECT_EQ(t.variables[0].code, "flow");
}

TEST(ParseCsv, Basics) {
  const auto t = parse_csv("date,00618\n1990-01-01,1.5");
  ASSERT_EQ(t.rows(), 1u);
  ASSERT_EQ(t.cols(), 1u);
  EXPECT_EQ(t.at(0, 0), 1.5);
  const auto q = parse_csv("date,\"a,b\",c\n1990-01-01,\"2.5\",NA\n");
  ASSERT_EQ(q.cols(), 2u);
  EXPECT_EQ(q.variables[0].code, "a,b");
  EXPECT_EQ(q.at(0, 0), 2.5);
  EXPECT_FALSE(q.at(0, 1).has_value());
  EXPECT_THROW(parse_csv("date,a\n1990-01-01\n"), RaggedRow);
}

TEST(ParseCsv, FixtureRoundTrip) {
  const auto t = parse_csv(read_file(fixture_dir() / "sample.csv"));
  ASSERT_EQ(t.rows(), 4u);
  ASSERT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.variables[1].code, "Nitrate, as N");
  const std::string once = emit_csv(t);
  const auto back = parse_csv(once);
  EXPECT_EQ(back, t);
  EXPECT_EQ(emit_csv(back), once);
}

TEST(ParseCsv, RdbFixtureSurvivesCsvRoundTrip) {
  auto t = parse_rdb(read_file(fixture_dir() / "sample20.rdb"));
  t.media.clear();
  for (auto& v : t.variables) v.label.clear();
  EXPECT_EQ(parse_csv(emit_csv(t)), t);
}

namespace {

TimeSeriesTable counted_table() {
  // Variable j is present on rows r with r % 5 < j + 1 -> 4, 8, 12, 16, 20 of 20.
  TimeSeriesTable t;
  for (int d = 0; d < 20; ++d) t.timestamps.push_back(ymd(1990 + d / 4, 1 + 3 * (d % 4), 1));
  for (const char* c : {"a", "b", "c", "d", "e"}) t.variables.push_back({c, "", ""});
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t j = 0; j < 5; ++j)
      t.values.push_back(r % 5 < j + 1 ? Cell{double(r)} : std::nullopt);
  return t;
}

}  // namespace

TEST(FilterTable, MinCountDropsSparseVariable) {
  TimeSeriesTable t;
  for (unsigned d = 1; d <= 4; ++d) t.timestamps.push_back(ymd(2000, 1, d));
  t.variables = {{"x", "", ""}, {"y", "", ""}};
  t.values = {1.0, 1.0, 2.0, std::nullopt, 3.0, 2.0, 4.0, 3.0};
  FilterSpec spec;
  spec.min_count = 4;
  const auto out = filter_table(t, spec);
  ASSERT_EQ(out.cols(), 1u);
  EXPECT_EQ(out.variables[0].code, "x");
  EXPECT_EQ(out.rows(), 4u);
}

TEST(FilterTable, RequiredVariableDropsRows) {
  TimeSeriesTable t;
  for (unsigned d = 1; d <= 3; ++d) t.timestamps.push_back(ymd(2000, 1, d));
  t.variables = {{"00618", "", ""}, {"00940", "", ""}};
  t.values = {1.0, 5.0, std::nullopt, 6.0, 2.0, 7.0};
  FilterSpec spec;
  spec.required_variable = "00618";
  const auto out = filter_table(t, spec);
  ASSERT_EQ(out.rows(), 2u);
  EXPECT_EQ(out.timestamps[1], ymd(2000, 1, 3));
  spec.required_variable = "99999";
  EXPECT_THROW(filter_table(t, spec), UnknownVariable);
}

TEST(FilterTable, CountsMatchHandTally) {
  const auto t = counted_table();
  for (std::size_t min_count : {1u, 5u, 9u, 12u, 13u, 20u, 21u}) {
    FilterSpec spec;
    spec.min_count = min_count;
    const auto out = filter_table(t, spec);
    std::vector<std::string> expect;
    for (std::size_t j = 0; j < 5; ++j)
      if (4 * (j + 1) >= min_count) expect.push_back(t.variables[j].code);
    std::vector<std::string> got;
    for (const auto& v : out.variables) got.push_back(v.code);
    EXPECT_EQ(got, expect) << "min_count " << min_count;
  }
  // Range 1991-01-01..1992-12-31 keeps rows 4..11 (r % 5 = 4,0,1,2,3,4,0,1);
  // counts are then 2, 4, 5, 6, 8.
  FilterSpec spec;
  spec.date_range = {ymd(1991, 1, 1), ymd(1992, 12, 31)};
  spec.min_count = 5;
  const auto out = filter_table(t, spec);
  EXPECT_EQ(out.rows(), 8u);
  ASSERT_EQ(out.cols(), 3u);
  EXPECT_EQ(out.variables[0].code, "c");
}

TEST(FilterTable, Idempotent) {
  const auto t = counted_table();
  FilterSpec spec;
  spec.min_count = 9;
  spec.required_variable = "b";
  spec.date_range = {ymd(1990, 4, 1), ymd(1993, 12, 31)};
  const auto once = filter_table(t, spec);
  EXPECT_EQ(filter_table(once, spec), once);
}

TEST(FilterTable, MediumFilter) {
  auto t = parse_rdb(read_file(fixture_dir() / "sample20.rdb"));
  t.media[2] = "OAQ";
  FilterSpec spec;
  spec.medium_code = "WS";
  EXPECT_EQ(filter_table(t, spec).rows(), 19u);
  t.media.clear();
  EXPECT_THROW(filter_table(t, spec), UnknownVariable);
}

TEST(FilterTable, InvalidSpec) {
  FilterSpec spec;
  spec.min_count = 0;
  EXPECT_THROW(filter_table(counted_table(), spec), InvalidConfig);
  spec.min_count = 1;
  spec.date_range = {ymd(2000, 1, 1), ymd(1999, 1, 1)};
  EXPECT_THROW(filter_table(counted_table(), spec), InvalidConfig);
}

TEST(DropIncompleteRows, Cases) {
  const auto t = counted_table();
  const auto out = drop_incomplete_rows(t);
  // Only rows with r % 5 == 4 carry every variable.
  EXPECT_EQ(out.rows(), 4u);
  EXPECT_EQ(out.missing_count(), 0u);
  EXPECT_EQ(drop_incomplete_rows(out), out);

  TimeSeriesTable none = t;
  for (std::size_t r = 0; r < none.rows(); ++r) none.at(r, 0) = std::nullopt;
  EXPECT_THROW(drop_incomplete_rows(none), EmptyResult);

  const auto f = parse_rdb(read_file(fixture_dir() / "sample20.rdb"));
  EXPECT_EQ(drop_incomplete_rows(f).rows(), 16u);
}

namespace {

struct CountingTransport {
  std::shared_ptr<std::size_t> calls = std::make_shared<std::size_t>(0);
  std::string body;
  int status = 200;

  HttpGet get() {
    return [c = calls, b = body, s = status](const std::string&) {
      ++*c;
      return HttpResponse{s, b};
    };
  }
};

RemoteRequest sample_request() {
  return {"11447650", {"00618", "00631"}, {ymd(1996, 1, 1), ymd(1996, 12, 31)}};
}

}  // namespace

TEST(Fetch, UrlExpansionAndCacheKey) {
  const auto req = sample_request();
  EXPECT_EQ(expand_url("http://h/q?site={site}&p={codes}&b={start}&e={end}", req),
            "http://h/q?site=11447650&p=00618,00631&b=1996-01-01&e=1996-12-31");
  EXPECT_EQ(req.cache_key(), "11447650|00618,00631|1996-01-01|1996-12-31");
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Fetch, CacheHitMakesNoNetworkCall) {
  const auto dir = fresh_dir("cachehit");
  FetchOptions opts{"http://unused/{site}", dir, false};
  const auto req = sample_request();
  write_file_atomic(cache_path(opts, req), "cached bytes\n");
  CountingTransport net;
  EXPECT_EQ(fetch_remote(req, opts, net.get()), "cached bytes\n");
  EXPECT_EQ(*net.calls, 0u);
  opts.offline = true;
  EXPECT_EQ(fetch_remote(req, opts, nullptr), "cached bytes\n");
}

TEST(Fetch, MissStoresVerbatimThenHits) {
  const auto dir = fresh_dir("miss");
  const FetchOptions opts{"http://unused/{site}", dir, false};
  CountingTransport net;
  net.body = read_file(fixture_dir() / "recorded_response.rdb");
  const auto req = sample_request();
  EXPECT_EQ(fetch_remote(req, opts, net.get()), net.body);
  EXPECT_EQ(read_file(cache_path(opts, req)), net.body);
  EXPECT_EQ(fetch_remote(req, opts, net.get()), net.body);
  EXPECT_EQ(*net.calls, 1u);
}

TEST(Fetch, OfflineMissAndErrorStatus) {
  const auto dir = fresh_dir("offline");
  FetchOptions opts{"http://unused/{site}", dir, true};
  CountingTransport net;
  EXPECT_THROW(fetch_remote(sample_request(), opts, net.get()), NetworkUnavailable);
  EXPECT_EQ(*net.calls, 0u);
  opts.offline = false;
  net.status = 503;
  EXPECT_THROW(fetch_remote(sample_request(), opts, net.get()), HttpStatus);
  EXPECT_FALSE(std::filesystem::exists(cache_path(opts, sample_request())));
}

TEST(Fetch, RecordedResponseParses) {
  const auto t = parse_rdb(read_file(fixture_dir() / "recorded_response.rdb"));
  ASSERT_EQ(t.rows(), 5u);
  ASSERT_EQ(t.cols(), 2u);
  EXPECT_EQ(t.variables[1].code, "00631");
  EXPECT_EQ(t.at(0, 0), 0.14);
  EXPECT_FALSE(t.at(2, 0).has_value());
  EXPECT_EQ(t.at(4, 1), 0.12);
}

// Local loopback server: exercises the real transport without external network.
TEST(Fetch, HttplibTransportAgainstLoopbackServer) {
  httplib::Server server;
  const std::string body = read_file(fixture_dir() / "recorded_response.rdb");
  server.Get("/rdb/11447650", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(body, "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto dir = fresh_dir("loopback");
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  FetchOptions opts{base + "/rdb/{site}", dir, false};
  const auto transport = httplib_transport(5);
  EXPECT_EQ(fetch_remote(sample_request(), opts, transport), body);

  RemoteRequest missing = sample_request();
  missing.site = "00000000";
  try {
    fetch_remote(missing, opts, transport);
    ADD_FAILURE() << "expected HttpStatus";
  } catch (const HttpStatus& e) {
    EXPECT_EQ(e.status(), 404);
  }
  server.stop();
  worker.join();

  RemoteRequest other = sample_request();
  other.site = "11111111";
  EXPECT_THROW(fetch_remote(other, opts, transport), NetworkUnavailable);
}
