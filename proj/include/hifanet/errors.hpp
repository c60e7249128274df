#pragma once

#include <stdexcept>
#include <string>

namespace hifanet {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map whole families onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// geometry
class BehindCamera : public Error { public: using Error::Error; };
class CenterOutsideImage : public Error { public: using Error::Error; };
class MismatchedLengths : public Error { public: using Error::Error; };

// numerics
class ShapeMismatch : public Error { public: using Error::Error; };
class NotScalar : public Error { public: using Error::Error; };

// training
class LabelOutOfRange : public Error { public: using Error::Error; };
class MissingGradients : public Error { public: using Error::Error; };
class EmptyDataset : public Error { public: using Error::Error; };

// models and configuration
class UnknownVariant : public Error { public: using Error::Error; };
class ConfigInvalid : public Error { public: using Error::Error; };

// file formats
class CorruptFile : public Error { public: using Error::Error; };
class VersionMismatch : public Error { public: using Error::Error; };

}  // namespace hifanet
