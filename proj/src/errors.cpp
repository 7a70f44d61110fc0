#include "fastr/errors.hpp"
