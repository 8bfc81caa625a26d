#pragma once

// JSON model files.
//
// Common fields: "kind" ("pi-mdp" | "pi-pomdp" | "pi-momdp"), "scale" (array
// of labels in [0,1]), "actions" (names) and an optional "stay_action" name.
//
//   pi-mdp    "states", "transition"[s][a] -> row over states, "preference"[s]
//   pi-pomdp  pi-mdp fields plus "observations", "observation"[s'][a] -> row
//             over observations, "initial_belief" (row over states) and an
//             optional "stay_observation"
//   pi-momdp  "visible_states", "hidden_states", "hidden_observations",
//             "transition"[v][h][a] -> row over visible, then hidden states,
//             "observation"[v'][h'][a] -> row over hidden observations,
//             "preference"[v][h], "initial": {"visible": name, "hidden": row},
//             optional "stay_observation"
//
// A row is either an array with one label per element or an object mapping
// element names to labels, where omitted elements are 0. Outer table levels
// are arrays in declaration order or objects keyed by name. A label must
// print, in shortest round-trip form, exactly like one of the scale labels.

#include "qposs/grid_bench.hpp"
#include "qposs/pi_momdp.hpp"
#include "qposs/pi_pomdp.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qposs {

enum class ModelKind { kPiMdp, kPiPomdp, kPiMomdp };

std::string_view to_string(ModelKind kind) noexcept;

struct ModelNames {
    /// Unused for pi-momdp.
    std::vector<std::string> states;
    std::vector<std::string> actions;
    /// Observations of a pi-pomdp, hidden observations of a pi-momdp.
    std::vector<std::string> observations;
    std::vector<std::string> visible;
    std::vector<std::string> hidden;

    friend bool operator==(const ModelNames&, const ModelNames&) = default;
};

struct ModelDocument {
    std::variant<PiMdpModel, PiPomdpModel, PiMomdpModel> model;
    ModelNames names;

    ModelKind kind() const noexcept { return static_cast<ModelKind>(model.index()); }
    const QualitativeScale& scale() const noexcept;

    friend bool operator==(const ModelDocument&, const ModelDocument&) = default;
};

/// Throws ParseError (with line and column), UnknownLabelError, or a
/// ModelError / DimensionError from model validation.
ModelDocument parse_model(std::string_view text);

/// Reads and parses a file; IoError when it cannot be read.
ModelDocument load_model(const std::filesystem::path& path);

/// Canonical JSON text; parse_model(serialize_model(d)) == d.
std::string serialize_model(const ModelDocument& document);

/// The possibilistic grid model with cell, action and observation names.
ModelDocument make_grid_document(const GridConfig& cfg);

/// Shortest round-trip decimal text of a label.
std::string format_label(double value);

} // namespace qposs
