// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace featevo
{

/// Root of every exception thrown by the engine.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class TimeoutError : public Error
{
public:
    using Error::Error;
};

class DegenerateLabelsError : public Error
{
public:
    using Error::Error;
};

} // namespace featevo
