/* Exercised by tests/c_header.rs. */
#include <stdio.h>
#include "regsum.h"

int main(void) {
    size_t src[] = {0, 0, 1, 2, 3, 4};
    size_t dst[] = {1, 2, 2, 3, 4, 5};
    RegsumGraph *g = NULL;
    if (regsum_graph_from_edges(6, src, dst, NULL, 6, &g) != REGSUM_STATUS_OK) {
        fprintf(stderr, "%s\n", regsum_last_error());
        return 1;
    }
    printf("regsum %s, %zu vertices\n", regsum_version(), regsum_graph_vertex_count(g));
    RegsumGraph *missing = NULL;
    RegsumStatus st = regsum_graph_load("/nonexistent", &missing);
    printf("load status %d: %s\n", (int)st, regsum_last_error());
    regsum_graph_free(g);
    return st == REGSUM_STATUS_IO ? 0 : 1;
}
