#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "alchemy/amplifier.hpp"
#include "alchemy/expr.hpp"
#include "alchemy/record.hpp"
#include "alchemy/soup.hpp"

namespace alchemy {

// Matches amplifier elements: every amplifier, or those of one test family.
struct AmplifierMotif {
    std::optional<TestFamily> family;
};

struct Motif {
    std::string label;
    std::variant<Expr, AmplifierMotif> reference;
};

class MotifSet {
public:
    MotifSet() = default;
    explicit MotifSet(std::vector<Motif> motifs);  // throws std::invalid_argument on duplicate labels

    const std::vector<Motif>& motifs() const { return motifs_; }
    std::vector<std::string> labels() const;

    PopulationRecord measure(const Soup& soup) const;

private:
    std::vector<Motif> motifs_;
};

// Molecules alpha-equivalent to the reference, or amplifiers matching it.
std::uint64_t count_motif(const Soup& soup, const std::variant<Expr, AmplifierMotif>& reference);

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Final record's count / soup_size >= threshold. Throws MetricsError for an
// empty series, unknown label or threshold outside [0, 1].
bool threshold_fraction(std::span<const PopulationRecord> records, const std::string& label, double threshold);

// Mean over records of count / soup_size.
double time_averaged_population(std::span<const PopulationRecord> records, const std::string& label);

// header: collision,<labels...>,soup_size; LF line endings.
void write_csv(std::ostream& out, std::span<const PopulationRecord> records, const std::vector<std::string>& labels);
std::string to_csv(std::span<const PopulationRecord> records, const std::vector<std::string>& labels);

struct CsvSeries {
    std::vector<std::string> labels;
    std::vector<PopulationRecord> records;
};
CsvSeries read_csv(std::istream& in);  // throws MetricsError on malformed input
CsvSeries read_csv_file(const std::string& path);

}  // namespace alchemy
