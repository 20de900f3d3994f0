#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include <lrnn/lrnn.hpp>

namespace testing_support {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(LRNN_FIXTURE_DIR) / name; }

inline std::string fixture_text(const std::string& name) { return lrnn::read_file(fixture(name)); }

inline lrnn::Template load_template(const std::string& name, lrnn::Family family = lrnn::Family::MaxSigmoid) {
  lrnn::Template t = lrnn::parse_template(fixture_text(name), name);
  t.family = family;
  return t;
}

inline lrnn::Example load_example(const std::string& name) {
  auto exs = lrnn::parse_examples(fixture_text(name), name);
  return exs.at(0);
}

inline lrnn::Atom atom(const std::string& text) {
  auto st = lrnn::parse_statements("1 :: " + text + ".");
  return std::get<lrnn::Statement::Clause>(st.at(0).item).head;
}

inline lrnn::GroundNetwork network(const lrnn::Template& t, const lrnn::Example& ex) {
  return lrnn::build(lrnn::ground(t, ex), t, ex.id);
}

struct RunResult {
  int status = -1;
  std::string output;
};

/// Runs the CLI through the shell, capturing stdout and stderr together.
inline RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + LRNN_BIN + "\" " + args + " 2>&1";
  RunResult r;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) r.output.append(buf.data(), n);
  const int raw = pclose(pipe.release());
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lrnn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
