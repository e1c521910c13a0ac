#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sabon {

// Shortest round-trip decimal text for a double (locale independent).
std::string format_double(double v);

// RFC 4180: CRLF line ends, fields quoted when they contain a comma, quote,
// CR or LF, embedded quotes doubled.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(std::vector<std::string> row);
    std::string str() const;
    void save(const std::filesystem::path& path) const;

    static std::string escape(const std::string& field);

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Grid field as CSV with columns i, j, value (or i, value on the circle).
void write_field_csv(const std::filesystem::path& path, const Eigen::VectorXd& values, int dim, int side);

// Self-contained SVG 1.1 heatmap of a side x side torus field (row index i is
// the x coordinate, drawn left to right; j is y, drawn bottom to top).
void write_heatmap_svg(const std::filesystem::path& path, const Eigen::VectorXd& values, int side,
                       const std::string& title);

// Eigenvalues in the complex plane with the unit circle overlaid.
void write_eigenvalue_svg(const std::filesystem::path& path, const std::vector<std::complex<double>>& values,
                          const std::string& title);

// Line plot of one or more curves sharing an x axis (for loss curves; y on a log scale).
void write_curve_svg(const std::filesystem::path& path, const std::vector<double>& x,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series,
                     const std::string& title);

// Line-oriented key=value manifest; artifacts are listed with SHA-256 sums in
// the order they were added.
class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void add_artifact(const std::filesystem::path& root, const std::filesystem::path& file);
    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<std::pair<std::string, std::string>> artifacts_;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace sabon
