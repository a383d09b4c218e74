#pragma once

namespace retmix {

double logBeta(double a, double b);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incompleteBetaReg(double a, double b, double x);

double normalCdf(double x);
double normalPdf(double x);

/// CDF of Student-t with nu degrees of freedom.
double studentTCdf(double t, double nu);

}  // namespace retmix
