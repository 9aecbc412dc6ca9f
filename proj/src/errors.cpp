#include "gcife/errors.hpp"

namespace gcife {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularCurve: return "SingularCurve";
    case ErrorKind::OutsideTube: return "OutsideTube";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TopologyError: return "TopologyError";
    case ErrorKind::TubeError: return "TubeError";
    case ErrorKind::DegenerateCut: return "DegenerateCut";
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::JumpResidualFailure: return "JumpResidualFailure";
    case ErrorKind::IndefiniteMass: return "IndefiniteMass";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::GeometryError: return "GeometryError";
  }
  return "Unknown";
}

}  // namespace gcife
