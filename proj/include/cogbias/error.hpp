#ifndef COGBIAS_ERROR_HPP
#define COGBIAS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cogbias {

/**
 * Raised for precondition violations and malformed inputs anywhere in the library.
 */
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}

#endif
