#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sphconf
{

/// Row-major n x 3 block of points, one point per row.
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Row-major n x 2 block of planar points.
template <typename Scalar>
using Points2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 2, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Rotation3 = Eigen::Matrix<Scalar, 3, 3>;

using Points3d = Points3<double>;
using Points2d = Points2<double>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Rotation3d = Rotation3<double>;

/// Compressed-row sparse matrix used for every Laplacian-patterned operator.
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Base for all errors raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: unreadable file, bad topology, bad landmarks.
class InputError : public Error
{
public:
    using Error::Error;
};

/// A source triangle with (numerically) zero area.
class DegenerateTriangleError : public Error
{
public:
    DegenerateTriangleError(std::string what, int face)
        : Error(std::move(what)), face_(face)
    {
    }
    int face() const noexcept { return face_; }

private:
    int face_;
};

/// An image triangle on the sphere collapsed to (numerically) zero area.
class DegenerateImageError : public Error
{
public:
    DegenerateImageError(std::string what, int face)
        : Error(std::move(what)), face_(face)
    {
    }
    int face() const noexcept { return face_; }

private:
    int face_;
};

/// A linear solve that could not be completed.
class SolverError : public Error
{
public:
    using Error::Error;
};

}  // namespace sphconf
