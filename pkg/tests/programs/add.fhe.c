// Unsigned addition that wraps at six bits.
u6 main(u6 a, u6 b) {
    return a + b;
}
