extern int unknown();

int main() {
    int a = 0;
    int j, m;
    if(m <= 0) return 0;

    for(j = 1; j <= m; j++) {
        if(unknown())
            a++;
        else
            a--;
    }

    assert(a >= -m && a <= m);
    return 0;
}
