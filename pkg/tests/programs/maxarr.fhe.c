// Maximum of an array using a helper function and a ternary.
u3 max2(u3 x, u3 y) {
    return x > y ? x : y;
}

u3 main(u3 xs[4]) {
    u3 best = xs[0];
    for (int i = 1; i < 4; i++) {
        best = max2(best, xs[i]);
    }
    return best;
}
