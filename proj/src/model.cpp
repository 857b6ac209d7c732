#include "lpvds/model.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <sstream>

namespace lpvds {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ParameterBox / DelaySpec
// ---------------------------------------------------------------------------

void ParameterBox::validate() const {
    const auto s = lower.size();
    if (s == 0) throw ModelError("param_box: at least one scheduling parameter is required");
    if (upper.size() != s || rate_lower.size() != s || rate_upper.size() != s)
        throw ModelError("param_box: lower/upper/rate_lower/rate_upper must share length");
    for (Eigen::Index k = 0; k < s; ++k) {
        if (!(lower(k) <= upper(k)))
            throw ModelError("param_box: lower > upper on axis " + std::to_string(k));
        if (!(rate_lower(k) <= rate_upper(k)))
            throw ModelError("param_box: rate_lower > rate_upper on axis " + std::to_string(k));
    }
}

bool ParameterBox::contains(const Vector& rho, double tol) const {
    if (rho.size() != lower.size()) return false;
    for (Eigen::Index k = 0; k < rho.size(); ++k) {
        if (rho(k) < lower(k) - tol || rho(k) > upper(k) + tol) return false;
    }
    return true;
}

std::vector<Vector> ParameterBox::rate_vertices() const {
    const int s = size();
    std::vector<Vector> verts;
    verts.reserve(static_cast<std::size_t>(1) << s);
    for (std::uint64_t mask = 0; mask < (1ULL << s); ++mask) {
        Vector v(s);
        for (int k = 0; k < s; ++k) v(k) = (mask >> k) & 1 ? rate_upper(k) : rate_lower(k);
        verts.push_back(std::move(v));
    }
    return verts;
}

void DelaySpec::validate() const {
    if (!(tau_bar > 0.0)) throw ModelError("delay: tau_bar must be > 0");
    if (!(rate_bound >= 0.0)) throw ModelError("delay: rate bound r must be >= 0");
}

// ---------------------------------------------------------------------------
// Monomial
// ---------------------------------------------------------------------------

int Monomial::total_degree() const {
    int d = 0;
    for (int e : exponents) d += e;
    return d;
}

double Monomial::eval(const Vector& rho) const {
    double v = 1.0;
    for (std::size_t k = 0; k < exponents.size(); ++k) {
        for (int p = 0; p < exponents[k]; ++p) v *= rho(static_cast<Eigen::Index>(k));
    }
    return v;
}

std::pair<double, Monomial> Monomial::derivative(int k) const {
    Monomial d = *this;
    if (exponents[static_cast<std::size_t>(k)] == 0) {
        std::fill(d.exponents.begin(), d.exponents.end(), 0);
        return {0.0, d};
    }
    const double scale = exponents[static_cast<std::size_t>(k)];
    d.exponents[static_cast<std::size_t>(k)] -= 1;
    return {scale, d};
}

std::string Monomial::to_string() const {
    std::ostringstream os;
    bool any = false;
    for (std::size_t k = 0; k < exponents.size(); ++k) {
        if (exponents[k] == 0) continue;
        if (any) os << "*";
        os << "rho" << k;
        if (exponents[k] > 1) os << "^" << exponents[k];
        any = true;
    }
    if (!any) os << "1";
    return os.str();
}

Monomial monomial_one(int num_params) {
    return Monomial{std::vector<int>(static_cast<std::size_t>(num_params), 0)};
}

Monomial monomial_rho(int num_params, int k, int power) {
    Monomial m = monomial_one(num_params);
    m.exponents[static_cast<std::size_t>(k)] = power;
    return m;
}

// ---------------------------------------------------------------------------
// LpvMatrixFunction
// ---------------------------------------------------------------------------

LpvMatrixFunction::LpvMatrixFunction(int rows, int cols, int num_params)
    : rows_(rows), cols_(cols), num_params_(num_params) {}

LpvMatrixFunction LpvMatrixFunction::constant(const Matrix& value, int num_params) {
    LpvMatrixFunction f(static_cast<int>(value.rows()), static_cast<int>(value.cols()), num_params);
    f.add_term(monomial_one(num_params), value);
    return f;
}

LpvMatrixFunction LpvMatrixFunction::zero(int rows, int cols, int num_params) {
    return LpvMatrixFunction(rows, cols, num_params);
}

bool LpvMatrixFunction::is_constant() const {
    for (const auto& t : terms_) {
        if (!t.basis.is_constant() && t.coeff.cwiseAbs().maxCoeff() != 0.0) return false;
    }
    return true;
}

void LpvMatrixFunction::add_term(const Monomial& basis, const Matrix& coeff) {
    if (basis.num_params() != num_params_)
        throw ModelError("basis exponent list length " + std::to_string(basis.num_params()) +
                         " does not match parameter count " + std::to_string(num_params_));
    if (basis.total_degree() > Monomial::kMaxTotalDegree)
        throw ModelError("unknown basis function " + basis.to_string() +
                         ": total degree above " + std::to_string(Monomial::kMaxTotalDegree));
    if (coeff.rows() != rows_ || coeff.cols() != cols_)
        throw ModelError("coefficient dimension mismatch: expected " + std::to_string(rows_) + "x" +
                         std::to_string(cols_) + ", got " + std::to_string(coeff.rows()) + "x" +
                         std::to_string(coeff.cols()));
    for (auto& t : terms_) {
        if (t.basis == basis) {
            t.coeff += coeff;
            return;
        }
    }
    terms_.push_back(Term{basis, coeff});
}

Matrix LpvMatrixFunction::eval(const Vector& rho) const {
    Matrix out = Matrix::Zero(rows_, cols_);
    for (const auto& t : terms_) out += t.basis.eval(rho) * t.coeff;
    return out;
}

LpvMatrixFunction LpvMatrixFunction::partial_derivative(int k) const {
    LpvMatrixFunction d(rows_, cols_, num_params_);
    for (const auto& t : terms_) {
        auto [scale, mono] = t.basis.derivative(k);
        if (scale != 0.0) d.add_term(mono, scale * t.coeff);
    }
    return d;
}

std::vector<LpvMatrixFunction> LpvMatrixFunction::partial_derivatives() const {
    std::vector<LpvMatrixFunction> out;
    out.reserve(static_cast<std::size_t>(num_params_));
    for (int k = 0; k < num_params_; ++k) out.push_back(partial_derivative(k));
    return out;
}

LpvMatrixFunction LpvMatrixFunction::transpose() const {
    LpvMatrixFunction out(cols_, rows_, num_params_);
    for (const auto& t : terms_) out.add_term(t.basis, t.coeff.transpose());
    return out;
}

LpvMatrixFunction LpvMatrixFunction::scaled(double alpha) const {
    LpvMatrixFunction out(rows_, cols_, num_params_);
    for (const auto& t : terms_) out.add_term(t.basis, alpha * t.coeff);
    return out;
}

LpvMatrixFunction LpvMatrixFunction::operator+(const LpvMatrixFunction& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_ || num_params_ != other.num_params_)
        throw ModelError("LpvMatrixFunction sum: dimension mismatch");
    LpvMatrixFunction out = *this;
    for (const auto& t : other.terms_) out.add_term(t.basis, t.coeff);
    return out;
}

Matrix evaluate(const LpvMatrixFunction& f, const Vector& rho, const ParameterBox& box) {
    if (!box.contains(rho))
        throw ModelError("evaluation point outside the parameter box");
    return f.eval(rho);
}

// ---------------------------------------------------------------------------
// LpvPlant
// ---------------------------------------------------------------------------

void LpvPlant::validate_dimensions() const {
    auto expect = [](const LpvMatrixFunction& f, int r, int c, const char* name) {
        if (f.rows() != r || f.cols() != c)
            throw ModelError(std::string("matrix ") + name + " has dimension " +
                             std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                             ", expected " + std::to_string(r) + "x" + std::to_string(c));
    };
    expect(A_p, n_p, n_p, "A_p");
    expect(B_p1, n_p, n_d, "B_p1");
    expect(B_p2, n_p, n_u, "B_p2");
    expect(C_p1, n_e, n_p, "C_p1");
    expect(D_p11, n_e, n_d, "D_p11");
    expect(D_p12, n_e, n_u, "D_p12");
    expect(C_p2, n_y, n_p, "C_p2");
    expect(D_p21, n_y, n_d, "D_p21");
    params.validate();
    delay.validate();
}

namespace {

std::vector<Vector> validation_grid(const ParameterBox& box, int points_per_axis) {
    const int s = box.size();
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(s));
    for (int k = 0; k < s; ++k) {
        const int n = points_per_axis < 2 ? 2 : points_per_axis;
        for (int i = 0; i < n; ++i) {
            const double t = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
            axes[static_cast<std::size_t>(k)].push_back(box.lower(k) + t * (box.upper(k) - box.lower(k)));
        }
    }
    std::vector<Vector> pts;
    std::vector<std::size_t> idx(static_cast<std::size_t>(s), 0);
    while (true) {
        Vector p(s);
        for (int k = 0; k < s; ++k) p(k) = axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
        pts.push_back(p);
        int k = 0;
        for (; k < s; ++k) {
            if (++idx[static_cast<std::size_t>(k)] < axes[static_cast<std::size_t>(k)].size()) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k == s) break;
    }
    return pts;
}

std::string vec_to_string(const Vector& v) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << "]";
    return os.str();
}

}  // namespace

void LpvPlant::validate_rank_assumptions(int points_per_axis) const {
    const double rank_tol = 1e-9;
    for (const Vector& rho : validation_grid(params, points_per_axis)) {
        {
            Eigen::JacobiSVD<Matrix> svd(D_p12.eval(rho));
            const auto& sv = svd.singularValues();
            if (sv.size() == 0 || sv(sv.size() - 1) <= rank_tol * std::max(1.0, sv(0)))
                throw ModelError("D_p12 loses full column rank at rho = " + vec_to_string(rho));
        }
        {
            Eigen::JacobiSVD<Matrix> svd(D_p21.eval(rho));
            const auto& sv = svd.singularValues();
            if (sv.size() == 0 || sv(sv.size() - 1) <= rank_tol * std::max(1.0, sv(0)))
                throw ModelError("D_p21 loses full row rank at rho = " + vec_to_string(rho));
        }
    }
}

// ---------------------------------------------------------------------------
// JSON document parsing / serialization
// ---------------------------------------------------------------------------

namespace {

Vector parse_vector(const json& arr, const char* name) {
    if (!arr.is_array()) throw ModelError(std::string(name) + " must be an array");
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ModelError(std::string(name) + " must contain numbers");
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
}

LpvMatrixFunction parse_matrix_terms(const json& arr, int rows, int cols, int s, const char* name) {
    if (!arr.is_array()) throw ModelError(std::string("matrix ") + name + " must be an array of terms");
    LpvMatrixFunction f(rows, cols, s);
    for (const auto& term : arr) {
        if (!term.contains("basis") || !term.contains("coeff"))
            throw ModelError(std::string("matrix ") + name + ": each term needs basis and coeff");
        const auto& be = term["basis"];
        if (!be.is_array() || static_cast<int>(be.size()) != s)
            throw ModelError(std::string("matrix ") + name +
                             ": basis must list one exponent per scheduling parameter");
        Monomial mono;
        for (const auto& e : be) {
            if (!e.is_number_integer() || e.get<int>() < 0)
                throw ModelError(std::string("matrix ") + name + ": basis exponents must be integers >= 0");
            mono.exponents.push_back(e.get<int>());
        }
        const auto& ce = term["coeff"];
        if (!ce.is_array() || static_cast<int>(ce.size()) != rows * cols)
            throw ModelError(std::string("matrix ") + name + ": coeff must hold rows*cols = " +
                             std::to_string(rows * cols) + " row-major entries");
        Matrix coeff(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                coeff(i, j) = ce[static_cast<std::size_t>(i * cols + j)].get<double>();
        f.add_term(mono, coeff);
    }
    return f;
}

json serialize_matrix_terms(const LpvMatrixFunction& f) {
    json arr = json::array();
    for (const auto& t : f.terms()) {
        json term;
        term["basis"] = t.basis.exponents;
        json coeff = json::array();
        for (int i = 0; i < f.rows(); ++i)
            for (int j = 0; j < f.cols(); ++j) coeff.push_back(t.coeff(i, j));
        term["coeff"] = std::move(coeff);
        arr.push_back(std::move(term));
    }
    return arr;
}

}  // namespace

LpvPlant parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelError(std::string("model document is not valid JSON: ") + e.what());
    }
    for (const char* key : {"dims", "param_box", "delay", "matrices"}) {
        if (!doc.contains(key)) throw ModelError(std::string("model document missing field ") + key);
    }

    LpvPlant p;
    const auto& dims = doc["dims"];
    for (const char* key : {"np", "nu", "nd", "ne", "ny"}) {
        if (!dims.contains(key) || !dims[key].is_number_integer() || dims[key].get<int>() < 0)
            throw ModelError(std::string("dims.") + key + " must be a nonnegative integer");
    }
    p.n_p = dims["np"].get<int>();
    p.n_u = dims["nu"].get<int>();
    p.n_d = dims["nd"].get<int>();
    p.n_e = dims["ne"].get<int>();
    p.n_y = dims["ny"].get<int>();

    const auto& box = doc["param_box"];
    p.params.lower = parse_vector(box.value("lower", json::array()), "param_box.lower");
    p.params.upper = parse_vector(box.value("upper", json::array()), "param_box.upper");
    p.params.rate_lower = parse_vector(box.value("rate_lower", json::array()), "param_box.rate_lower");
    p.params.rate_upper = parse_vector(box.value("rate_upper", json::array()), "param_box.rate_upper");
    p.params.validate();
    const int s = p.params.size();

    const auto& delay = doc["delay"];
    if (!delay.contains("tau_bar") || !delay.contains("r"))
        throw ModelError("delay must provide tau_bar and r");
    p.delay.tau_bar = delay["tau_bar"].get<double>();
    p.delay.rate_bound = delay["r"].get<double>();
    p.delay.validate();

    const auto& mats = doc["matrices"];
    auto get = [&](const char* name, int rows, int cols) {
        if (!mats.contains(name)) throw ModelError(std::string("matrices missing ") + name);
        return parse_matrix_terms(mats[name], rows, cols, s, name);
    };
    p.A_p = get("A_p", p.n_p, p.n_p);
    p.B_p1 = get("B_p1", p.n_p, p.n_d);
    p.B_p2 = get("B_p2", p.n_p, p.n_u);
    p.C_p1 = get("C_p1", p.n_e, p.n_p);
    p.D_p11 = get("D_p11", p.n_e, p.n_d);
    p.D_p12 = get("D_p12", p.n_e, p.n_u);
    p.C_p2 = get("C_p2", p.n_y, p.n_p);
    p.D_p21 = get("D_p21", p.n_y, p.n_d);

    p.validate_dimensions();
    p.validate_rank_assumptions();
    return p;
}

LpvPlant load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::string serialize_model(const LpvPlant& plant) {
    json doc;
    doc["dims"] = {{"np", plant.n_p}, {"nu", plant.n_u}, {"nd", plant.n_d},
                   {"ne", plant.n_e}, {"ny", plant.n_y}};
    auto vec = [](const Vector& v) {
        json arr = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
        return arr;
    };
    doc["param_box"] = {{"lower", vec(plant.params.lower)},
                        {"upper", vec(plant.params.upper)},
                        {"rate_lower", vec(plant.params.rate_lower)},
                        {"rate_upper", vec(plant.params.rate_upper)}};
    doc["delay"] = {{"tau_bar", plant.delay.tau_bar}, {"r", plant.delay.rate_bound}};
    doc["matrices"] = {{"A_p", serialize_matrix_terms(plant.A_p)},
                       {"B_p1", serialize_matrix_terms(plant.B_p1)},
                       {"B_p2", serialize_matrix_terms(plant.B_p2)},
                       {"C_p1", serialize_matrix_terms(plant.C_p1)},
                       {"D_p11", serialize_matrix_terms(plant.D_p11)},
                       {"D_p12", serialize_matrix_terms(plant.D_p12)},
                       {"C_p2", serialize_matrix_terms(plant.C_p2)},
                       {"D_p21", serialize_matrix_terms(plant.D_p21)}};
    return doc.dump(2);
}

}  // namespace lpvds
