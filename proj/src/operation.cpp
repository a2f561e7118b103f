#include "evs/operation.hpp"

#include <charconv>
#include <stdexcept>

#include "evs/format.hpp"

namespace evs {

namespace {
template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
}  // namespace

bool changes_world(const Operation& op) {
  if (const auto* c = std::get_if<Condition>(&op)) return c->mode == Condition::Mode::stratify;
  return true;
}

Event event_of(const Operation& op) {
  return std::visit(Overloaded{
                        [](const Restrict& r) { return r.event; },
                        [](const Condition& c) {
                          if (c.mode != Condition::Mode::stratify)
                            throw std::logic_error("adjust has no event");
                          return Event{{{c.variable, c.value}}};
                        },
                        [](const Intervene&) -> Event {
                          throw std::logic_error("intervene has no event");
                        },
                    },
                    op);
}

void validate(const Operation& op, const CausalDiagram& diagram) {
  std::visit(Overloaded{
                 [&](const Restrict& r) {
                   if (r.event.clauses.empty()) throw InvalidModel("restriction without clauses");
                   validate_event(r.event, diagram);
                 },
                 [&](const Condition& c) {
                   if (!diagram.variable(c.variable).observed())
                     throw InvalidModel("cannot condition on hidden variable '" + c.variable + "'");
                   if (c.value != 0 && c.value != 1)
                     throw InvalidModel("stratum value must be 0 or 1");
                 },
                 [&](const Intervene& i) {
                   diagram.index_of(i.variable);
                   if (!(i.probability >= 0.0 && i.probability <= 1.0))
                     throw InvalidModel("assignment probability outside [0,1]");
                 },
             },
             op);
}

std::string describe(const Operation& op) {
  return std::visit(Overloaded{
                        [](const Restrict& r) {
                          std::string out = "restrict ";
                          for (std::size_t i = 0; i < r.event.clauses.size(); ++i) {
                            if (i) out += ",";
                            out += r.event.clauses[i].first + "=" +
                                   std::to_string(r.event.clauses[i].second);
                          }
                          return out;
                        },
                        [](const Condition& c) {
                          if (c.mode == Condition::Mode::adjust) return "adjust " + c.variable;
                          return "stratify " + c.variable + "=" + std::to_string(c.value);
                        },
                        [](const Intervene& i) {
                          return "intervene " + i.variable + " p=" + format_number(i.probability);
                        },
                    },
                    op);
}

}  // namespace evs
