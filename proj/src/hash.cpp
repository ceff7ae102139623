#include "vinf/hash.hpp"

#include <openssl/evp.h>

namespace vinf {

struct Sha256::Ctx {
    EVP_MD_CTX* md = nullptr;
    bool fresh = false;
};

namespace {
const EVP_MD* sha256_md() {
    static EVP_MD* md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
    return md;
}
}  // namespace

Sha256::Sha256() : ctx_(std::make_unique<Ctx>()) {
    ctx_->md = EVP_MD_CTX_new();
    if (!ctx_->md || EVP_DigestInit_ex(ctx_->md, sha256_md(), nullptr) != 1)
        throw Error("SHA-256 initialisation failed");
    ctx_->fresh = true;
}

Sha256::~Sha256() {
    if (ctx_ && ctx_->md) EVP_MD_CTX_free(ctx_->md);
}

Sha256::Sha256(Sha256&&) noexcept = default;
Sha256& Sha256::operator=(Sha256&&) noexcept = default;

Sha256& Sha256::update(const void* data, std::size_t n) {
    if (!ctx_->fresh) {
        EVP_DigestInit_ex(ctx_->md, nullptr, nullptr);
        ctx_->fresh = true;
    }
    EVP_DigestUpdate(ctx_->md, data, n);
    return *this;
}

Sha256& Sha256::update(ByteSpan data) { return update(data.data(), data.size()); }

Digest Sha256::finish() {
    if (!ctx_->fresh) EVP_DigestInit_ex(ctx_->md, nullptr, nullptr);
    Digest out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_->md, out.data(), &len);
    ctx_->fresh = false;
    return out;
}

Digest sha256(ByteSpan data) {
    Sha256 h;
    return h.update(data).finish();
}

}  // namespace vinf
