// SPDX-License-Identifier: Apache-2.0

#include "cia/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace cia
{
    namespace
    {
        // FFTW planning is not thread safe; execution on new arrays is.
        fftw_plan get_plan(arma::uword n, int sign)
        {
            static std::mutex mtx;
            static std::map<std::pair<arma::uword, int>, fftw_plan> plans;
            std::lock_guard<std::mutex> lock(mtx);
            auto key = std::make_pair(n, sign);
            if (auto it = plans.find(key); it != plans.end())
                return it->second;
            arma::cx_vec a(n), b(n);
            fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                           reinterpret_cast<fftw_complex *>(a.memptr()),
                                           reinterpret_cast<fftw_complex *>(b.memptr()),
                                           sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
            plans.emplace(key, p);
            return p;
        }

        void run(const arma::cx_vec &in, arma::cx_vec &out, int sign)
        {
            out.set_size(in.n_elem);
            if (in.n_elem == 0)
                return;
            fftw_plan p = get_plan(in.n_elem, sign);
            fftw_execute_dft(p,
                             reinterpret_cast<fftw_complex *>(const_cast<std::complex<double> *>(in.memptr())),
                             reinterpret_cast<fftw_complex *>(out.memptr()));
        }
    }

    void fft_forward_raw(const arma::cx_vec &in, arma::cx_vec &out) { run(in, out, FFTW_FORWARD); }
    void fft_backward_raw(const arma::cx_vec &in, arma::cx_vec &out) { run(in, out, FFTW_BACKWARD); }

    arma::cx_vec fft_unitary(const arma::cx_vec &x)
    {
        arma::cx_vec out;
        fft_forward_raw(x, out);
        out /= std::sqrt(static_cast<double>(x.n_elem));
        return out;
    }

    arma::cx_vec ifft_unitary(const arma::cx_vec &x)
    {
        arma::cx_vec out;
        fft_backward_raw(x, out);
        out /= std::sqrt(static_cast<double>(x.n_elem));
        return out;
    }
}
