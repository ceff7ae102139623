#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vinf/merkle.hpp"
#include "vinf/model.hpp"

namespace vinf::ref {

/// One entry of a hashed trace: an activation and the running hash of
/// every activation before it.
struct HashedTraceEntry {
    float a = 0.0f;
    Digest prefix{};

    bool operator==(const HashedTraceEntry&) const = default;
};

/// 36 bytes: le f32 activation, then the prefix hash.
Bytes encode_entry(const HashedTraceEntry& e);
std::optional<HashedTraceEntry> decode_entry(ByteSpan bytes);

/// H(prefix || le f32 a), the prefix hash of the following entry.
Digest chain(const Digest& prefix, float a);
/// Prefix hash of entry 0.
Digest empty_prefix();

/// Index of the last entry for a trace of `num_real` activations: the
/// smallest power of two >= num_real - 1 (at least 1). Entries 0..n exist.
std::size_t last_index(std::size_t num_real);

struct HashedTrace {
    std::vector<HashedTraceEntry> entries;  // size n + 1
    std::size_t num_real = 0;

    std::size_t n() const { return entries.size() - 1; }
};

/// Entries past the real activations are (0.0, chained hash).
HashedTrace build_hashed_trace(std::span<const float> values);
vc::Commitment commit_hashed_trace(const vc::VcParams& params, const HashedTrace& h);

/// What a party reveals in the last step: entries from the first parent of
/// node l through l itself, and the fan-in row of l opened against cm_M.
struct FinalOpening {
    std::vector<vc::OpeningProof> entries;
    std::optional<vc::OpeningProof> weights;  // absent for input and padding nodes
};

/// A disputing prover. Returning nullopt means refusing to answer, which
/// forfeits the game.
class Party {
public:
    virtual ~Party() = default;
    virtual vc::Commitment commitment() const = 0;
    virtual std::optional<vc::OpeningProof> open(std::size_t k) = 0;
    virtual std::optional<FinalOpening> final_open(std::size_t first, std::size_t ell) = 0;
};

/// Commits to the hashed form of an arbitrary activation vector and answers
/// truthfully about it. With the honest trace it is the honest party; with
/// any other vector it is a cheater that still opens consistently.
class TraceParty : public Party {
public:
    TraceParty(const vc::VcParams& params, std::shared_ptr<const Model> model, std::vector<float> values);

    vc::Commitment commitment() const override { return tree_.commitment(); }
    std::optional<vc::OpeningProof> open(std::size_t k) override;
    std::optional<FinalOpening> final_open(std::size_t first, std::size_t ell) override;

    const HashedTrace& hashed() const { return hashed_; }

private:
    std::shared_ptr<const Model> model_;
    HashedTrace hashed_;
    std::vector<Bytes> leaves_;
    vc::MerkleTree tree_;
    vc::MerkleTree model_tree_;
};

std::unique_ptr<TraceParty> make_honest_party(const vc::VcParams& params, std::shared_ptr<const Model> model,
                                              std::span<const float> qry);

enum class Winner { P1, P2, BothRejected };
std::string_view to_string(Winner w);

struct Verdict {
    Winner winner = Winner::BothRejected;
    std::size_t failing_index = 0;  // the adjudicated entry
    std::size_t rounds = 0;         // bisection rounds run
    std::string reason;
    std::vector<std::string> log;   // one JSON object per line
};

struct RefereeConfig {
    vc::VcParams vc;
    double tol = 1e-4;
};

/// Outcome of the last-step check for one party.
struct StepCheck {
    bool ok = false;
    bool exact = false;        // claimed value bit-equal to the recomputation
    double residual = 0.0;
    std::string reason;
};

/// Checks party's final opening for entry `ell`, given the agreed entry
/// ell - 1. Input nodes must match the query, padding entries must be 0.0,
/// other nodes must satisfy phi(sum w a + b) against weights opened from
/// cm_model. Chain links over the opened range are verified.
StepCheck referee_verify_step(const Architecture& arch, const RefereeConfig& cfg, const vc::Commitment& cm_model,
                              const vc::Commitment& cm_party, std::span<const float> qry, std::size_t ell,
                              const FinalOpening& opening);

/// Runs the bisection game between two parties. Throws Error when the
/// parties' final entries agree (there is nothing to referee).
Verdict run_bisection(Party& p1, Party& p2, const Architecture& arch, const vc::Commitment& cm_model,
                      std::span<const float> qry, const RefereeConfig& cfg = {});

}  // namespace vinf::ref
