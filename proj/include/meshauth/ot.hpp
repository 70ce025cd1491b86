#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/garble.hpp"
#include "meshauth/rng.hpp"
#include "meshauth/transport.hpp"

namespace meshauth {

using LabelPair = std::array<Label, 2>;

// 1-of-2 oblivious label transfer. Both parties run in-process, but every
// message crosses the metered channel so byte and round-trip counts are
// faithful to the wire protocol.
class OtProtocol {
public:
    virtual ~OtProtocol() = default;

    // `sender_party` holds the label pairs; the other party holds the
    // choice bits and learns exactly one label per pair.
    virtual std::vector<Label> run(DuplexChannel& ch, DuplexChannel::Party sender_party,
                                   const std::vector<LabelPair>& sender_pairs,
                                   const BitVec& receiver_choices, Rng& sender_rng,
                                   Rng& receiver_rng) = 0;
    virtual std::string name() const = 0;
};

// Trusted-dealer stand-in for tests: the receiver reveals its choices and
// the sender ships only the chosen labels. Never used in deployment paths.
class DealerOt : public OtProtocol {
public:
    std::vector<Label> run(DuplexChannel& ch, DuplexChannel::Party sender_party,
                           const std::vector<LabelPair>& sender_pairs,
                           const BitVec& receiver_choices, Rng& sender_rng,
                           Rng& receiver_rng) override;
    std::string name() const override { return "dealer"; }
};

// Diffie-Hellman 1-of-2 OT over the 1536-bit MODP group (group 5):
// sender publishes A = g^a; the receiver hides its choice in
// B = g^b or A * g^b; per-message keys are hashed from the shared secrets.
class DhBaseOt : public OtProtocol {
public:
    std::vector<Label> run(DuplexChannel& ch, DuplexChannel::Party sender_party,
                           const std::vector<LabelPair>& sender_pairs,
                           const BitVec& receiver_choices, Rng& sender_rng,
                           Rng& receiver_rng) override;
    std::string name() const override { return "dh-base"; }
};

// OT extension in the IKNP style: kappa DH base transfers in the reverse
// direction carry the receiver's bit-matrix columns, after which any number
// of label pairs costs only symmetric crypto.
class IknpOt : public OtProtocol {
public:
    explicit IknpOt(size_t kappa = 128) : kappa_(kappa) {}
    std::vector<Label> run(DuplexChannel& ch, DuplexChannel::Party sender_party,
                           const std::vector<LabelPair>& sender_pairs,
                           const BitVec& receiver_choices, Rng& sender_rng,
                           Rng& receiver_rng) override;
    std::string name() const override { return "iknp"; }

private:
    size_t kappa_;
};

std::unique_ptr<OtProtocol> make_ot(const std::string& name);

}  // namespace meshauth
