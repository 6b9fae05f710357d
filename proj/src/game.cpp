#include "sada/game.hpp"

#include <memory>

namespace sada {

Transcript run_accuracy_game(Mechanism& mechanism, Analyst& analyst,
                             std::span<const Point> database, std::size_t ell) {
    if (database.empty()) throw Error("accuracy game needs a nonempty database");
    mechanism.init(database);
    Transcript transcript;
    for (std::size_t i = 0; i < ell; ++i) {
        StatQuery q = analyst.next_query(i);
        if (q.domain_bits() != mechanism.domain_bits())
            throw ProtocolViolationError(i, "query not total on the mechanism domain");
        const double z = mechanism.answer(q);
        analyst.observe_answer(i, z);
        transcript.push(static_cast<std::uint32_t>(i), z,
                        std::make_shared<const StatQuery>(std::move(q)));
    }
    return transcript;
}

}  // namespace sada
