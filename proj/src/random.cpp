#include "boed/random.hpp"
#include "boed/types.hpp"

#include <cmath>
#include <sstream>

namespace boed {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index, Stream stream) {
    std::uint64_t s = splitmix64(root);
    s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
    return splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double Mesh::work_per_eval(double gamma) const {
    if (is_exact() || gamma == 0.0) return 1.0;
    return std::pow(h, -gamma);
}

namespace {
std::string format_theta(const std::string& what, const Vector& theta) {
    std::ostringstream os;
    os.precision(17);
    os << what << " at theta = [";
    for (Eigen::Index i = 0; i < theta.size(); ++i) os << (i ? ", " : "") << theta[i];
    os << "]";
    return os.str();
}

std::string format_spectrum(const Vector& s) {
    std::ostringstream os;
    os.precision(6);
    os << "precision matrix is not positive definite (non-identifiable design); eigenvalues:";
    for (Eigen::Index i = 0; i < s.size(); ++i) os << ' ' << s[i];
    return os.str();
}
}  // namespace

ModelEvaluationError::ModelEvaluationError(const std::string& what, Vector theta)
    : NumericalError(format_theta(what, theta)), theta_(std::move(theta)) {}

NonIdentifiableError::NonIdentifiableError(Vector spectrum)
    : NumericalError(format_spectrum(spectrum)), spectrum_(std::move(spectrum)) {}

}  // namespace boed
