// Absolute difference through an if/else that becomes a select.
u7 main(i6 a, i6 b) {
    i7 r;
    if (a > b) {
        r = (i7)a - (i7)b;
    } else {
        r = (i7)b - (i7)a;
    }
    return (u7)r;
}
