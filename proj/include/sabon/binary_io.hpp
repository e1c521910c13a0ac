#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Core>

// Minimal raw binary helpers shared by the dataset cache and checkpoints.
// Values are written in host byte order; only little-endian hosts are supported.
namespace sabon::binary {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <class T>
void write(std::ostream& out, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("binary read: unexpected end of stream");
    return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const auto size = read<std::uint64_t>(in);
    if (size > (1ULL << 32)) throw std::runtime_error("binary read: implausible string length");
    std::string s(size, '\0');
    in.read(s.data(), static_cast<std::streamsize>(size));
    if (!in) throw std::runtime_error("binary read: unexpected end of stream");
    return s;
}

template <class Derived>
void write_matrix(std::ostream& out, const Eigen::PlainObjectBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    write<std::int64_t>(out, m.rows());
    write<std::int64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
}

template <class MatrixType>
MatrixType read_matrix(std::istream& in) {
    using Scalar = typename MatrixType::Scalar;
    const auto rows = read<std::int64_t>(in);
    const auto cols = read<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows * cols > (1LL << 34)) {
        throw std::runtime_error("binary read: implausible matrix shape");
    }
    MatrixType m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
    if (!in) throw std::runtime_error("binary read: unexpected end of stream");
    return m;
}

inline void expect_magic(std::istream& in, const std::string& magic) {
    std::string got(magic.size(), '\0');
    in.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in || got != magic) throw std::runtime_error("binary read: bad magic, expected " + magic);
}

} // namespace sabon::binary
