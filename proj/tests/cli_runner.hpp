#pragma once
// Runs the command-line tool and captures its output.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <regex>
#include <stdexcept>
#include <string>

namespace cli {

struct Run {
  int exit_code = -1;
  std::string out;  // stdout, with stderr appended when `merge_stderr`
};

inline Run run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(RIGIDITY_LAB) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + cmd);
  Run r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// Report text with the wall-clock field blanked.
inline std::string without_duration(const std::string& report) {
  static const std::regex duration(R"("duration_s": [-+0-9.eE]+)");
  return std::regex_replace(report, duration, "\"duration_s\": 0");
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("rigidity_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  FILE* f = std::fopen(p.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + p.string());
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

}  // namespace cli
