// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_ERRORS_HPP
#define DFNPART_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dfnpart {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid or degenerate geometry (non-planar fracture, quadruple trace meeting, ...).
class GeometryError : public Error
{
public:
  using Error::Error;
};

/// Malformed input file. The message carries line / field context.
class ParseError : public Error
{
public:
  using Error::Error;
};

class MeshError : public Error
{
public:
  using Error::Error;
};

class PartitionError : public Error
{
public:
  using Error::Error;
};

class NumberingError : public Error
{
public:
  using Error::Error;
};

/// Breakdown or non-convergence of the iterative solver.
class SolverError : public Error
{
public:
  using Error::Error;
};

} // namespace dfnpart

#endif // DFNPART_ERRORS_HPP
