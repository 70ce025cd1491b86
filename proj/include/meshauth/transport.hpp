#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>

#include "meshauth/bits.hpp"

namespace meshauth {

// In-process duplex message channel between the two protocol parties.
// Round trips are metered by direction changes: a message that reverses
// the direction of traffic after the initiator has spoken closes one trip.
class DuplexChannel {
public:
    enum class Party : uint8_t { A, B };

    // Optional transcript capture: every sent message is copied into the
    // sink, letting audits inspect exactly what crossed the channel.
    void set_tap(std::vector<Bytes>* sink) { tap_ = sink; }

    void send(Party from, Bytes msg) {
        auto& q = from == Party::A ? a_to_b_ : b_to_a_;
        if (tap_) tap_->push_back(msg);
        bytes_sent_ += msg.size();
        ++messages_;
        if (!last_sender_.has_value()) first_sender_ = from;
        else if (from != first_sender_ && *last_sender_ == first_sender_)
            ++round_trips_;  // responder answered the initiator's flight
        last_sender_ = from;
        q.push_back(std::move(msg));
    }

    Bytes recv(Party to) {
        auto& q = to == Party::A ? b_to_a_ : a_to_b_;
        if (q.empty()) throw std::runtime_error("channel: recv on empty queue");
        Bytes msg = std::move(q.front());
        q.pop_front();
        return msg;
    }

    size_t bytes_sent() const { return bytes_sent_; }
    size_t message_count() const { return messages_; }
    // Completed round trips; a trailing unanswered initiator flight counts as one.
    size_t round_trips() const {
        if (!last_sender_.has_value()) return 0;
        return round_trips_ + (*last_sender_ == first_sender_ ? 1 : 0);
    }

private:
    std::deque<Bytes> a_to_b_;
    std::deque<Bytes> b_to_a_;
    size_t bytes_sent_ = 0;
    size_t messages_ = 0;
    size_t round_trips_ = 0;
    std::optional<Party> last_sender_;
    Party first_sender_ = Party::A;
    std::vector<Bytes>* tap_ = nullptr;
};

}  // namespace meshauth
