// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "ctfsep/config.hpp"
#include "ctfsep/io.hpp"
#include "ctfsep/wav.hpp"
#include "test_util.hpp"

using namespace ctfsep;

namespace {

MultichannelSignal random_signal(std::uint64_t seed, Index channels, Index length, int fs) {
  std::mt19937_64 rng(seed);
  MatrixXd x = test::random_real(rng, channels, length, 0.2).cwiseMax(-1.0).cwiseMin(0.99);
  return MultichannelSignal(x, fs);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("float wav round trip is exact at float precision") {
  const MultichannelSignal x = random_signal(1, 3, 777, 8000);
  std::stringstream buf;
  write_wav(x, buf, WavFormat::float32);
  const MultichannelSignal y = read_wav(buf);
  REQUIRE(y.channels() == 3);
  REQUIRE(y.length() == 777);
  CHECK(y.sample_rate() == 8000);
  const MatrixXd expect = x.samples().cast<float>().cast<double>();
  CHECK(y.samples() == expect);
}

TEST_CASE("pcm16 wav round trip") {
  const MultichannelSignal x = random_signal(2, 2, 500, 16000);
  std::stringstream buf;
  write_wav(x, buf, WavFormat::pcm16);
  const MultichannelSignal y = read_wav(buf);
  REQUIRE(y.samples().rows() == 2);
  CHECK((y.samples() - x.samples()).cwiseAbs().maxCoeff() <= std::ldexp(1.0, -15));
}

TEST_CASE("pcm16 clips") {
  MatrixXd x(1, 2);
  x << 3.0, -3.0;
  std::stringstream buf;
  write_wav(MultichannelSignal(x, 16000), buf, WavFormat::pcm16);
  const MultichannelSignal y = read_wav(buf);
  CHECK(y.samples()(0, 0) == doctest::Approx(32767.0 / 32768.0));
  CHECK(y.samples()(0, 1) == -1.0);
}

TEST_CASE("malformed wav") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_wav(empty), FormatError);
  std::stringstream junk("RIFX1234WAVEfmt ");
  CHECK_THROWS_AS(read_wav(junk), FormatError);

  std::stringstream buf;
  write_wav(random_signal(3, 1, 100, 16000), buf);
  const std::string whole = buf.str();
  std::stringstream cut(whole.substr(0, whole.size() - 10));
  CHECK_THROWS_AS(read_wav(cut), FormatError);
  CHECK_THROWS_AS(load_wav("/nonexistent/x.wav"), FormatError);
}

TEST_CASE("rir tensor round trip") {
  std::mt19937_64 rng(4);
  RirTensor r(3, 2, 17);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 2; ++j) r.filter(i, j) = test::random_real(rng, 1, 17);
  }
  std::stringstream buf;
  write_rir_tensor(r, buf);
  CHECK(buf.str().size() == 16 + 3 * 2 * 17 * 8);
  CHECK(buf.str().substr(0, 4) == "CTFR");
  const RirTensor s = read_rir_tensor(buf);
  REQUIRE(s.mics() == 3);
  REQUIRE(s.sources() == 2);
  REQUIRE(s.length() == 17);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 2; ++j) CHECK(s.filter(i, j) == r.filter(i, j));
  }
}

TEST_CASE("rir tensor layout") {
  RirTensor r(2, 2, 1);
  r.filter(0, 0)(0) = 1.0;
  r.filter(0, 1)(0) = 2.0;
  r.filter(1, 0)(0) = 3.0;
  r.filter(1, 1)(0) = 4.0;
  std::stringstream buf;
  write_rir_tensor(r, buf);
  const std::string bytes = buf.str();
  std::vector<double> values(4);
  std::memcpy(values.data(), bytes.data() + 16, 32);  // little-endian host
  CHECK(values == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("bad rir tensors") {
  std::stringstream magic("XXXX");
  CHECK_THROWS_AS(read_rir_tensor(magic), FormatError);

  RirTensor r(1, 1, 4);
  std::stringstream buf;
  write_rir_tensor(r, buf);
  const std::string whole = buf.str();
  std::stringstream cut(whole.substr(0, whole.size() - 3));
  CHECK_THROWS_AS(read_rir_tensor(cut), FormatError);
  std::stringstream header(whole.substr(0, 10));
  CHECK_THROWS_AS(read_rir_tensor(header), FormatError);

  std::string zero = whole;
  zero[12] = 0;  // L = 0
  std::stringstream empty(zero);
  CHECK_THROWS_AS(read_rir_tensor(empty), FormatError);
}

TEST_CASE("noise psd round trip") {
  std::mt19937_64 rng(5);
  const MatrixXd psd = test::random_real(rng, 9, 3).cwiseAbs();
  std::stringstream buf;
  write_noise_psd(psd, buf);
  CHECK(read_noise_psd(buf) == psd);
}

TEST_CASE("noise psd parsing") {
  std::stringstream ok("# header\n1, 2\r\n\n3,4\n");
  MatrixXd expect(2, 2);
  expect << 1, 2, 3, 4;
  CHECK(read_noise_psd(ok) == expect);

  std::stringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_noise_psd(ragged), FormatError);
  std::stringstream negative("1,-2\n");
  CHECK_THROWS_AS(read_noise_psd(negative), FormatError);
  std::stringstream text("1,abc\n");
  CHECK_THROWS_AS(read_noise_psd(text), FormatError);
  std::stringstream nan("nan\n");
  CHECK_THROWS_AS(read_noise_psd(nan), FormatError);
  std::stringstream nothing("# only a comment\n");
  CHECK_THROWS_AS(read_noise_psd(nothing), FormatError);
}

TEST_CASE("settings files") {
  std::stringstream in("# comment\nmethod = mpdr\n\n hop=128  # trailing\nsnr_db = none\n");
  const Settings s = parse_settings(in);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == std::pair<std::string, std::string>{"method", "mpdr"});
  CHECK(s[1] == std::pair<std::string, std::string>{"hop", "128"});
  RunConfig cfg;
  cfg.scenario.snr_db = 10.0;
  apply_settings(cfg, s);
  CHECK(cfg.method == Method::mpdr);
  CHECK(cfg.hop == 128);
  CHECK_FALSE(cfg.scenario.snr_db.has_value());

  std::stringstream bad("method mint\n");
  CHECK_THROWS_AS(parse_settings(bad), FormatError);
  CHECK_THROWS_AS(split_setting("hop"), FormatError);
  CHECK(split_setting(" delta = 1e-3 ").second == "1e-3");
}

TEST_CASE("setting errors") {
  RunConfig cfg;
  CHECK_THROWS_AS(apply_setting(cfg, "frobnicate", "1"), ArgumentError);
  CHECK_THROWS_AS(apply_setting(cfg, "hop", "12x"), ArgumentError);
  CHECK_THROWS_AS(apply_setting(cfg, "delta", "inf"), ArgumentError);
  CHECK_THROWS_AS(apply_setting(cfg, "method", "ica"), ArgumentError);
  CHECK_THROWS_AS(apply_setting(cfg, "timing", "maybe"), ArgumentError);
  cfg.hop = 300;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  RunConfig files;
  files.mix_wav = "x.wav";
  CHECK_THROWS_AS(validate(files), ArgumentError);
  files.rir_file = "r.bin";
  CHECK_NOTHROW(validate(files));
  files.noise_psd = "measure";
  CHECK_THROWS_AS(validate(files), ArgumentError);
}

TEST_CASE("describe") {
  RunConfig cfg;
  apply_setting(cfg, "delta", "0.001");
  apply_setting(cfg, "desired", "1,0");
  const auto d = describe(cfg);
  CHECK(d.at("method") == "mint");
  CHECK(std::stod(d.at("delta")) == 0.001);
  CHECK(d.at("desired") == "1,0");
  CHECK(d.at("snr_db") == "none");
  CHECK(d.at("rho") == "auto");
  CHECK(d.count("mix_wav") == 0);
}

TEST_CASE("bench spec") {
  const Settings s = {{"sweep.methods", "mint, classo"}, {"sweep.mics", "2,3,4"},
                      {"sweep.snr_db", "none,10"}, {"repeats", "2"}, {"hop", "128"}};
  const BenchSpec spec = make_bench_spec(s);
  CHECK(spec.methods == std::vector<Method>{Method::mint, Method::classo});
  CHECK(spec.mics == std::vector<Index>{2, 3, 4});
  CHECK(spec.sources == std::vector<Index>{spec.base.scenario.sources});
  REQUIRE(spec.snr_db.size() == 2);
  CHECK_FALSE(spec.snr_db[0].has_value());
  CHECK(*spec.snr_db[1] == 10.0);
  CHECK(spec.repeats == 2);
  CHECK(spec.base.hop == 128);
  CHECK_THROWS_AS(make_bench_spec({{"sweep.rooms", "1"}}), ArgumentError);
  CHECK_THROWS_AS(make_bench_spec({{"repeats", "0"}}), ArgumentError);
  CHECK_THROWS_AS(make_bench_spec({{"mix_wav", "a.wav"}, {"rir_file", "r"}}), ArgumentError);
}

}
