#pragma once

#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "chainflow/ingest.hpp"

namespace fixtures {

inline std::string hex_id(std::uint64_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(n));
  std::string s(buf);
  return "0x" + std::string(static_cast<std::size_t>(width) - s.size(), '0') + s;
}

inline std::string addr(std::uint64_t n) { return hex_id(n, 40); }
inline std::string hash(std::uint64_t n) { return hex_id(n, 64); }

struct Ev {
  std::string name;
  std::vector<std::pair<std::string, std::string>> props;
};

inline chainflow::TxRecord tx(std::uint64_t n, std::int64_t ts, const std::string& from,
                              const std::string& to, std::initializer_list<Ev> events) {
  chainflow::TxRecord t;
  t.tx_hash = hash(n);
  t.block_number = static_cast<std::uint64_t>(ts);
  t.tx_index = 0;
  t.from_addr = from;
  t.to_addr = to;
  t.value = "0";
  t.timestamp = ts;
  std::uint64_t log = 0;
  for (const auto& e : events) {
    chainflow::EventRecord r;
    r.tx_hash = t.tx_hash;
    r.log_index = log++;
    r.name = e.name;
    for (const auto& [k, v] : e.props) r.properties.push_back({k, v});
    t.events.push_back(std::move(r));
  }
  return t;
}

/// Three users and one contract. A mints twice and is named as a gift
/// recipient by C; B stakes the token A minted first; C gifts and claims.
inline std::vector<chainflow::TxRecord> three_address_records() {
  const auto a = addr(0xa), b = addr(0xb), c = addr(0xc), game = addr(0xd);
  return {
      tx(1, 100, a, game, {{"Mint", {}}, {"Transfer", {{"tokenId", "1"}}}}),
      tx(2, 200, a, game, {{"Mint", {}}, {"Transfer", {{"tokenId", "2"}}}}),
      tx(3, 300, b, game, {{"Stake", {{"tokenId", "1"}}}}),
      tx(4, 400, c, game, {{"Gift", {{"to", a}}}}),
      tx(5, 500, c, game, {{"Claim", {}}, {"Claim", {}}, {"Claim", {}}, {"Reward", {}}}),
      tx(6, 600, b, game, {{"Gift", {{"to", c}}}}),
  };
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("chainflow_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  for (const auto& l : lines) std::fprintf(f, "%s\n", l.c_str());
  std::fclose(f);
}

}  // namespace fixtures
