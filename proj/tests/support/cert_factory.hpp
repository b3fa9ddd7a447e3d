#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "certfraud/cert_model.hpp"
#include "certfraud/encoding.hpp"
#include "certfraud/timeutil.hpp"

namespace certfraud::testing {

using KeyPtr = std::shared_ptr<EVP_PKEY>;

/// Cached RSA-2048 key for `slot`; generated once per process.
KeyPtr test_key(int slot);

struct CertOptions {
  std::vector<std::pair<std::string, std::string>> subject;  // short names: CN, O, OU, C, ST, L
  std::string serial = "1";                                    // decimal, may be negative or huge
  UtcTime not_before = utc_from_civil(2024, 1, 1);
  UtcTime not_after = utc_from_civil(2026, 1, 1);
  bool md5 = false;
  int key_slot = 0;
  bool ca = false;
};

struct TestCert {
  Bytes der;
  KeyPtr key;

  std::string pem() const;
  CertificateSummary summary() const;
};

/// Signed by `issuer`, or self-signed when it is null.
TestCert make_cert(const CertOptions& options, const TestCert* issuer = nullptr);

/// Signed with `signer_key` but naming `issuer`'s subject as issuer.
TestCert make_cert_signed_by(const CertOptions& options, const TestCert& issuer, const KeyPtr& signer_key);

}  // namespace certfraud::testing
