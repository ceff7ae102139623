#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vinf/merkle.hpp"
#include "vinf/model.hpp"
#include "vinf/path_test.hpp"

namespace vinf::proto {

struct ProtocolConfig {
    std::size_t num_paths = 1;
    double tol = 1e-4;
    bool cover_outputs = false;
    std::uint64_t max_len = std::uint64_t{1} << 40;

    static ProtocolConfig strict() {
        ProtocolConfig c;
        c.tol = 0.0;
        return c;
    }
};

/// Everything both parties agree on before a session: the public
/// architecture, the commitment parameters and the test settings.
struct PublicParams {
    vc::VcParams vc;
    Architecture arch;
    std::size_t num_paths = 1;
    double tol = 1e-4;
    bool cover_outputs = false;
    std::uint32_t security_bits = 128;
    static constexpr std::size_t kChallengeBytes = 32;

    path::PathOptions path_options() const { return {num_paths, cover_outputs}; }
    void validate() const;

    bool operator==(const PublicParams&) const = default;
};

PublicParams gen_params(std::uint32_t security_bits, const Architecture& arch, const ProtocolConfig& config = {});

Bytes encode_params(const PublicParams& pp);
Digest params_hash(const PublicParams& pp);
std::string params_to_json(const PublicParams& pp);
PublicParams params_from_json(std::string_view text);

/// First prover message: claimed output y and the trace commitment.
struct Proof1 {
    std::vector<float> claimed_output;
    vc::Commitment trace_commitment;

    bool operator==(const Proof1&) const = default;
};

struct WeightOpening {
    std::size_t layer = 0;
    std::size_t node = 0;
    vc::OpeningProof proof;  // value = fan-in row, le f32

    bool operator==(const WeightOpening&) const = default;
};

/// Second prover message. Weight openings are keyed by (layer, node),
/// activation openings by flat trace position; both sorted, no duplicates.
struct Proof2 {
    std::vector<WeightOpening> weights;
    std::vector<vc::OpeningProof> activations;

    bool operator==(const Proof2&) const = default;
};

/// Prover-side state between the two prover messages.
class ProverState {
public:
    ProverState(const PublicParams& pp, std::shared_ptr<const Model> model, std::vector<float> qry);

    const Trace& trace() const { return trace_; }
    const Model& model() const { return *model_; }
    const PublicParams& params() const { return pp_; }
    const vc::MerkleTree& model_tree() const { return model_tree_; }
    const vc::MerkleTree& trace_tree() const { return trace_tree_; }
    std::span<const float> query() const { return qry_; }

    /// Overwrites the trace the prover commits to (adversarial provers).
    void replace_trace(Trace t);

private:
    void commit();

    PublicParams pp_;
    std::shared_ptr<const Model> model_;
    std::vector<float> qry_;
    Trace trace_;
    std::vector<Bytes> model_leaves_;
    vc::MerkleTree model_tree_;
    vc::MerkleTree trace_tree_;
};

/// Runs inference and commits to the trace.
std::pair<Proof1, ProverState> prove1(const PublicParams& pp, std::shared_ptr<const Model> model,
                                      std::span<const float> qry);
std::pair<Proof1, ProverState> prove1(const PublicParams& pp, const Model& model, std::span<const float> qry);

/// Proof1 for whatever trace the state currently holds.
Proof1 make_proof1(const ProverState& state);

/// Opens every weight row and activation the path test reads for `rho`,
/// plus the whole output layer.
Proof2 prove2(const ProverState& state, const path::Challenge& rho);

/// Positions the verifier will read: weight rows as (layer, node) and
/// activations as flat trace positions (output layer included).
struct OpeningDemand {
    std::vector<std::pair<std::size_t, std::size_t>> weights;
    std::vector<std::size_t> activations;
};
OpeningDemand opening_demand(const PublicParams& pp, const path::Challenge& rho);

enum class Reason {
    Ok,
    BadOpening,
    PathInconsistent,
    OutputMismatch,
    InputMismatch,
    MissingOpening,
    ParamsMismatch,
    Malformed,
};

std::string_view to_string(Reason r);

struct VerifyResult {
    bool accept = false;
    Reason reason = Reason::Ok;
    std::string detail;
    path::TestReport report;

    explicit operator bool() const { return accept; }
};

/// Pure verification; reads model and trace values only through openings
/// that verify against cm_model and proof1's trace commitment.
VerifyResult verify(const PublicParams& pp, const vc::Commitment& cm_model, std::span<const float> qry,
                    std::span<const float> y, const Proof1& proof1, const path::Challenge& rho, const Proof2& proof2);

/// Full session record. `rho` and `proof2` are absent in partial
/// transcripts written between rounds.
struct Transcript {
    Digest pp_hash{};
    vc::Commitment cm_model;
    std::vector<float> qry;
    Proof1 proof1;
    std::optional<path::Challenge> rho;
    std::optional<Proof2> proof2;

    bool operator==(const Transcript&) const = default;
};

Bytes serialize_transcript(const Transcript& t);
Transcript deserialize_transcript(ByteSpan data);
Bytes serialize_proof2(const Proof2& p);
Proof2 deserialize_proof2(ByteSpan data);

/// Verifies a complete transcript against `pp`; a pp-hash mismatch or a
/// missing round rejects.
VerifyResult replay(const PublicParams& pp, const Transcript& t);

/// Convenience: all three rounds with an honest prover.
Transcript run_honest(const PublicParams& pp, const Model& model, std::span<const float> qry, const path::Challenge& rho);

}  // namespace vinf::proto
