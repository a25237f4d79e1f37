#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tailrank/io.hpp"

namespace fixture {

// A file shaped like the USAutoBI claims table: 1340 rows; CLMSEX has 742 F,
// 586 M and 12 NA; ATTORNEY has 685 ones and 655 zeros; LOSS is always present
// and heavy-tailed; CLMAGE and MARITAL carry their own NAs.
inline std::string usautobi_csv() {
  const std::size_t n = 1340;
  std::vector<std::string> sex;
  sex.insert(sex.end(), 742, "F");
  sex.insert(sex.end(), 586, "M");
  sex.insert(sex.end(), 12, "NA");
  std::vector<std::string> attorney;
  attorney.insert(attorney.end(), 685, "1");
  attorney.insert(attorney.end(), 655, "0");
  std::mt19937_64 rng(1340);
  std::shuffle(sex.begin(), sex.end(), rng);
  std::shuffle(attorney.begin(), attorney.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::ostringstream os;
  os << "CASENUM,ATTORNEY,CLMSEX,MARITAL,CLMINSUR,SEATBELT,CLMAGE,LOSS\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 1.0 - unif(rng);
    const double loss = 0.005 * std::pow(u, -0.9);
    os << (i + 1) << ',' << attorney[i] << ',' << sex[i] << ',' << (i % 97 == 0 ? "NA" : "2") << ",2,1,"
       << (i % 7 == 0 ? std::string("NA") : std::to_string(18 + i % 60)) << ',' << tailrank::format_double(loss)
       << '\n';
  }
  return os.str();
}

inline std::string write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace fixture
