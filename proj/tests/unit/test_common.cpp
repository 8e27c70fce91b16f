#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "tcr/common/errors.hpp"
#include "tcr/common/http.hpp"
#include "tcr/common/io.hpp"
#include "tcr/common/rng.hpp"

using namespace tcr;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Random123 kat_vectors
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("rng is deterministic per (seed, stream)") {
  Rng a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_stream |= x != c.next_u64();
    differs_seed |= x != d.next_u64();
  }
  CHECK(differs_stream);
  CHECK(differs_seed);
}

TEST_CASE("rng distributions") {
  Rng r(7);
  const int n = 200000;
  double sum = 0.0, sum_n = 0.0, sum_n2 = 0.0;
  std::size_t hits = 0;
  std::array<int, 7> counts{};
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    double z = r.normal();
    sum_n += z;
    sum_n2 += z * z;
    hits += r.bernoulli(0.3);
    auto k = r.below(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sum_n / n) < 0.01);
  CHECK(sum_n2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(static_cast<double>(hits) / n == doctest::Approx(0.3).epsilon(0.02));
  for (int c : counts) CHECK(static_cast<double>(c) / n == doctest::Approx(1.0 / 7).epsilon(0.03));
  CHECK(r.below(1) == 0);
}

TEST_CASE("shuffle is a permutation") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  Rng r(1);
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 50);
  CHECK(*s.begin() == 0);
  CHECK(*s.rbegin() == 49);
}

TEST_CASE("derive_seed separates its inputs") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(42, a, b));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(42, 1, 2) == derive_seed(42, 1, 2));
}

TEST_CASE("fixed-decimal json") {
  ojson j;
  j["a"] = 0.1234567;
  j["b"] = 3;
  j["c"] = "x";
  j["d"] = -0.0000001;
  j["e"] = ojson::array({1.5, nullptr, true});
  CHECK(dump_fixed(j) == R"({"a":0.123457,"b":3,"c":"x","d":0.000000,"e":[1.500000,null,true]})");
  CHECK(format_fixed(2.0 / 3.0, 2) == "0.67");
  CHECK_THROWS_AS(format_fixed(std::nan(""), 6), FormatError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("file helpers") {
  auto dir = std::filesystem::temp_directory_path() / "tcr_test_common";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "lines.txt").string();
  write_file(path, "one\r\n\ntwo\n");
  CHECK(read_file(path) == "one\r\n\ntwo\n");
  CHECK(read_lines(path) == std::vector<std::string>{"one", "two"});
  CHECK(sha256_file(path) == sha256_hex("one\r\n\ntwo\n"));
  CHECK_THROWS_AS(read_file((dir / "missing").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("url parsing") {
  auto u = parse_url("http://127.0.0.1:8080/v1/embed");
  CHECK(u.origin == "http://127.0.0.1:8080");
  CHECK(u.path == "/v1/embed");
  CHECK(parse_url("http://host").path == "/");
  CHECK_THROWS_AS(parse_url("https://host/x"), ConfigError);
  CHECK_THROWS_AS(parse_url("host/x"), ConfigError);
  CHECK_THROWS_AS(parse_url("http:///x"), ConfigError);
}

TEST_CASE("http transport failure reports status 0") {
  auto r = http_post_json("http://127.0.0.1:1/x", "{}", 200);
  CHECK(r.status == 0);
  CHECK_FALSE(r.error.empty());
}
