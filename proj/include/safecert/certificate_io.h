#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "safecert/compose.h"

namespace safecert {

/// Malformed, truncated or wrong-version certificate files.
class CertificateFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCertificateVersion = 1;
inline constexpr const char* kCertificateFormat = "safecert-certificate";

nlohmann::json CertificateToJson(const NetworkCertificate& certificate);
NetworkCertificate CertificateFromJson(const nlohmann::json& doc);

/// Text form with sorted keys and a trailing newline. Identical
/// certificates give identical text.
std::string SerializeCertificate(const NetworkCertificate& certificate);
NetworkCertificate ParseCertificate(const std::string& text);

/// Writes through a temporary file in the same directory, then renames.
void StoreCertificate(const NetworkCertificate& certificate, const std::filesystem::path& path);
NetworkCertificate LoadCertificate(const std::filesystem::path& path);

}  // namespace safecert
