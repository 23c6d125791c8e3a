// All six signed comparisons as a bit mask.
u6 main(i6 a, i6 b) {
    u6 m = 0;
    if (a < b) m |= 1;
    if (a <= b) m |= 2;
    if (a > b) m |= 4;
    if (a >= b) m |= 8;
    if (a == b) m |= 16;
    if (a != b) m |= 32;
    return m;
}
