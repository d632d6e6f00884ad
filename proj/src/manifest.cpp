#include "hpred/manifest.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <memory>

#include <openssl/evp.h>

#include "hpred/error.hpp"

namespace hpred::manifest {

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error(ErrorCode::IoError, "SHA-1 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string file_hash(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::InputNotFound, "cannot read " + file.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return git_blob_hash(bytes);
}

void RunManifest::add_input(const std::filesystem::path& file) {
  inputs.push_back({file.generic_string(), file_hash(file)});
}

void RunManifest::add_output(const std::filesystem::path& file) {
  outputs.push_back({file.generic_string(), file_hash(file)});
}

nlohmann::json RunManifest::to_json() const {
  const auto records = [](const std::vector<FileRecord>& files) {
    auto arr = nlohmann::json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"hash", f.hash}});
    return arr;
  };
  return {{"command", command},
          {"seed", seed},
          {"config", config},
          {"inputs", records(inputs)},
          {"outputs", records(outputs)}};
}

}  // namespace hpred::manifest
