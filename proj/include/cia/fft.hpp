// SPDX-License-Identifier: Apache-2.0
//
// Unitary DFT helpers on top of FFTW. Plans are created with FFTW_ESTIMATE so
// results are bit-reproducible between runs.

#ifndef CIA_FFT_HPP
#define CIA_FFT_HPP

#include <armadillo>

namespace cia
{
    // (F x)_k = P^{-1/2} sum_n x_n exp(-j 2 pi k n / P)
    arma::cx_vec fft_unitary(const arma::cx_vec &x);
    // F^H x
    arma::cx_vec ifft_unitary(const arma::cx_vec &x);

    // Unnormalized transforms used by fast correlation.
    void fft_forward_raw(const arma::cx_vec &in, arma::cx_vec &out);
    void fft_backward_raw(const arma::cx_vec &in, arma::cx_vec &out);
}

#endif
