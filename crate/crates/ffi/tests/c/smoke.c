#include <stdio.h>
#include "rsi.h"

int main(void) {
    RsiSystem *sys = NULL;
    if (rsi_system_case_study(1, &sys) != RSI_STATUS_OK) return 10;
    RsiIndexReport *report = NULL;
    if (rsi_compute_report(sys, RSI_BACKEND_SOS, &report) != RSI_STATUS_OK) return 11;
    double gamma = 0.0, beta = 0.0;
    if (rsi_report_gamma(report, 0, 0, &gamma) != RSI_STATUS_OK) return 12;
    if (rsi_report_beta(report, 0, &beta) != RSI_STATUS_OK) return 13;
    RsiPolicy *policy = NULL;
    if (rsi_synthesize(sys, report, &policy) != RSI_STATUS_OK) return 14;
    double x[3] = {15.0, 15.0, 15.0}, u[3];
    if (rsi_policy_evaluate(policy, sys, x, 3, u, 3) != RSI_STATUS_OK) return 15;
    if (rsi_system_case_study(3, &sys) != RSI_STATUS_INVALID_ARGUMENT) return 16;
    char *msg = rsi_last_error_message();
    if (msg == NULL) return 17;
    printf("%.6f %.6f %.6f %s\n", gamma, beta, u[1], msg);
    rsi_string_free(msg);
    rsi_policy_free(policy);
    rsi_report_free(report);
    rsi_system_free(sys);
    return 0;
}
